//! The multilevel estimator and its diagnostics.
//!
//! Level `ℓ` uses `M_ℓ = M0·2^ℓ` steps. Level 0 contributes the plain mean of
//! `φ`, each finer level the mean of a coupled fine/coarse difference, and the
//! sum telescopes to the finest-level expectation. Sample counts follow
//!
//! ```text
//! N_ℓ = ⌈k ε⁻² √(V̂_ℓ h_ℓ) Σ_j √(V̂_j / h_j)⌉
//! ```
//!
//! with `k = 2` when the error budget is split between bias and variance and
//! `k = 3` when discrete increments add an inter-level bias term.
//!
//! Every sample draws from its own counter-addressed stream, and partial sums
//! are formed over fixed index blocks and merged in index order, so results do
//! not depend on the number of worker threads.

mod bias;
mod calibrate;
mod config;
mod driver;
mod stats;

pub use bias::{
    combined_law, inter_level_bias, spectral_expectation, telescoping_bias, BiasEstimate, BiasMethod, BiasMethodUsed,
};
pub use calibrate::{
    c1_from_yhat, calibrate_at, calibrate_levels, coarse_steps_for_eps, eps_for_levels, levels_for_eps, Calibration,
    CalibrationTarget, DEFAULT_PILOT_LEVEL,
};
pub use config::{ErrorSplit, MlmcConfig};
pub use driver::{extrapolate, optimal_n, optimal_n_unrounded, optimal_n_with, run, single_level, MlmcResult};
pub use stats::LevelStats;

use rayon::prelude::*;
use stats::Partial;

/// Sample indices per block.
const CHUNK: u64 = 1024;

/// Evaluates `f` on indices `start..end` and sums in fixed blocks.
pub(crate) fn sum_range<F>(start: u64, end: u64, f: F) -> Partial
where
    F: Fn(u64) -> f64 + Sync,
{
    if end <= start {
        return Partial::new();
    }
    let first = start / CHUNK;
    let last = (end - 1) / CHUNK;
    let parts: Vec<Partial> = (first..=last)
        .into_par_iter()
        .map(|c| {
            let lo = (c * CHUNK).max(start);
            let hi = ((c + 1) * CHUNK).min(end);
            let mut p = Partial::new();
            for i in lo..hi {
                p.push(f(i));
            }
            p
        })
        .collect();
    let mut total = Partial::new();
    for p in &parts {
        total.n += p.n;
        total.sum_y.merge(&p.sum_y);
        total.sum_y2.merge(&p.sum_y2);
        total.finite &= p.finite;
    }
    total
}
