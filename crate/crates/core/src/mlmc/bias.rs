//! The bias `E[P̂_ℓ − P̃_ℓ]` between a level driven directly by a discrete law
//! and the same level driven by increments merged from two finer draws.
//!
//! For Gaussian increments the merge reproduces the law exactly and the bias
//! vanishes identically. For discrete laws it is small and of high order in
//! `h`, usually well below what plain sampling resolves, so two exact
//! evaluations are offered besides common-random-number sampling:
//!
//! - tree enumeration of both expectations, feasible for short paths;
//! - for the harmonic oscillator with the Gaussian bump, the step map is
//!   linear, so the end momentum is an affine combination of the increments
//!   and `E[φ]` is a one-dimensional integral against the product of the
//!   increments' characteristic functions.

use std::f64::consts::PI;

use super::config::MlmcConfig;
use super::sum_range;
use crate::error::{Error, Result};
use crate::exact_coarse::{enumerate, DEFAULT_LEAF_BUDGET};
use crate::increments::{stream_id, Atom, DiscreteLaw, IncrementSource};
use crate::integrators::{Combiner, PathConfig, Scheme, Stepper};
use crate::model::{integrate_gk15, LangevinModel, Potential, QoI, State};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BiasMethod {
    /// Spectral when applicable, else enumeration within the default leaf
    /// budget, else sampling with the given parameters.
    Auto { samples: u64, seed: u64 },
    Spectral,
    Enumeration { budget: u128 },
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiasMethodUsed {
    Identity,
    Spectral,
    Enumeration,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasEstimate {
    pub level: usize,
    pub h: f64,
    /// `E[P̂_ℓ − P̃_ℓ]`
    pub value: f64,
    /// Zero for the exact methods.
    pub stderr: f64,
    pub method: BiasMethodUsed,
}

/// The law of one merged increment: atoms `combine(a, b)` with probability
/// `p_a p_b`, `a` varying slowest.
pub(crate) fn merged_law(law: &DiscreteLaw, combiner: &Combiner) -> DiscreteLaw {
    let mut atoms = Vec::with_capacity(law.len() * law.len());
    for a in law.atoms() {
        for b in law.atoms() {
            atoms.push(Atom {
                value: combiner.combine(a.value, b.value),
                probability: a.probability * b.probability,
            });
        }
    }
    DiscreteLaw::new(atoms).expect("product of valid laws is valid")
}

/// Law of the merged increments that drive level `steps` when it serves as the
/// coarse member of a pair.
pub fn combined_law(scheme: Scheme, model: &LangevinModel, steps: usize, law: &DiscreteLaw) -> Result<DiscreteLaw> {
    let h = PathConfig::new(scheme, model, steps)?.h;
    let combiner = Combiner::for_scheme(scheme, model.lambda(), 0.5 * h)?;
    Ok(merged_law(law, &combiner))
}

/// `E[P̂_ℓ − P̃_ℓ]` at level `level` of `config`.
pub fn inter_level_bias(
    config: &MlmcConfig,
    model: &LangevinModel,
    qoi: &QoI,
    level: usize,
    method: BiasMethod,
) -> Result<BiasEstimate> {
    let steps = config.steps(level);
    let h = config.h(level, model.t_end());
    let estimate = |value, stderr, method| BiasEstimate {
        level,
        h,
        value,
        stderr,
        method,
    };
    let Some(law) = config.dist.discrete_law() else {
        return Ok(estimate(0.0, 0.0, BiasMethodUsed::Identity));
    };
    let merged = combined_law(config.scheme, model, steps, &law)?;
    let method = match method {
        BiasMethod::Auto { samples, seed } => {
            if spectral_applies(model, qoi) {
                BiasMethod::Spectral
            } else {
                let leaves = (merged.len() as f64).powf((steps * config.scheme.draws_per_step() * model.dim()) as f64);
                if leaves <= DEFAULT_LEAF_BUDGET as f64 {
                    BiasMethod::Enumeration {
                        budget: DEFAULT_LEAF_BUDGET,
                    }
                } else {
                    BiasMethod::MonteCarlo { samples, seed }
                }
            }
        }
        m => m,
    };
    match method {
        BiasMethod::Spectral => {
            let direct = spectral_expectation(config.scheme, model, qoi, steps, &law)?;
            let merged = spectral_expectation(config.scheme, model, qoi, steps, &merged)?;
            Ok(estimate(direct - merged, 0.0, BiasMethodUsed::Spectral))
        }
        BiasMethod::Enumeration { budget } => {
            let direct = enumerate(model, config.scheme, qoi, steps, &law, budget)?.value;
            let merged = enumerate(model, config.scheme, qoi, steps, &merged, budget)?.value;
            Ok(estimate(direct - merged, 0.0, BiasMethodUsed::Enumeration))
        }
        BiasMethod::MonteCarlo { samples, seed } => {
            let (value, stderr) = sampled_bias(config, model, qoi, level, samples, seed)?;
            Ok(estimate(value, stderr, BiasMethodUsed::MonteCarlo))
        }
        BiasMethod::Auto { .. } => unreachable!("resolved above"),
    }
}

/// `Σ_{ℓ<L} E[P̂_ℓ − P̃_ℓ]`, the amount by which the level sum misses the
/// finest-level expectation under discrete increments.
pub fn telescoping_bias(config: &MlmcConfig, model: &LangevinModel, qoi: &QoI, method: BiasMethod) -> Result<f64> {
    (0..config.levels)
        .map(|l| inter_level_bias(config, model, qoi, l, method).map(|b| b.value))
        .sum()
}

/// Sampling on common random numbers: each step draws `ζ₁, ζ₂`; the direct
/// path uses `ζ₁` and the merged path `combine(ζ₁, ζ₂)`.
fn sampled_bias(
    config: &MlmcConfig,
    model: &LangevinModel,
    qoi: &QoI,
    level: usize,
    samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let steps = config.steps(level);
    let h = config.h(level, model.t_end());
    let stepper = Stepper::new(config.scheme, model, h)?;
    let combiner = Combiner::for_scheme(config.scheme, model.lambda(), 0.5 * h)?;
    let n = stepper.increments_per_step();
    let init = model.initial_state();
    let dist = config.dist;
    let part = sum_range(0, samples, |i| {
        let mut src = IncrementSource::new(dist, seed, stream_id(level, i));
        let mut z1 = vec![0.0; n];
        let mut z2 = vec![0.0; n];
        let mut zc = vec![0.0; n];
        let mut direct = init.clone();
        let mut merged = init.clone();
        for _ in 0..steps {
            src.fill(&mut z1);
            src.fill(&mut z2);
            for k in 0..n {
                zc[k] = combiner.combine(z1[k], z2[k]);
            }
            stepper.advance(&mut direct, &z1);
            stepper.advance(&mut merged, &zc);
        }
        qoi.evaluate(&direct) - qoi.evaluate(&merged)
    });
    if !part.finite {
        return Err(Error::NonFinite { level });
    }
    let m = part.n as f64;
    let mean = part.sum_y.value() / m;
    let var = ((part.sum_y2.value() - part.sum_y.value().powi(2) / m) / (m - 1.0)).max(0.0);
    Ok((mean, (var / m).sqrt()))
}

fn spectral_applies(model: &LangevinModel, qoi: &QoI) -> bool {
    matches!(model.potential(), Potential::Harmonic { .. }) && model.dim() == 1 && matches!(qoi, QoI::GaussianBump)
}

/// `E[φ(P_M)]` for a linear one-dimensional step map driven by i.i.d.
/// increments from `law`.
///
/// With `P_M = m + Σ_j c_j ξ_j` and `exp(−2u²) = E[cos(Ku)]` for `K ~ N(0, 4)`,
///
/// `E[φ] = √(2/π) ∫ N(k; 0, 4) Re(e^{ik(m − ½)} Π_j χ(k c_j)) dk`
///
/// with `χ` the characteristic function of `law`.
pub fn spectral_expectation(
    scheme: Scheme,
    model: &LangevinModel,
    qoi: &QoI,
    steps: usize,
    law: &DiscreteLaw,
) -> Result<f64> {
    if !spectral_applies(model, qoi) {
        return Err(Error::Unsupported(
            "spectral evaluation needs a one-dimensional harmonic model and the Gaussian bump".into(),
        ));
    }
    let h = PathConfig::new(scheme, model, steps)?.h;
    let stepper = Stepper::new(scheme, model, h)?;
    let (mean, coeffs) = momentum_coefficients(&stepper, &model.initial_state(), steps);
    let shift = mean - 0.5;
    let atoms = law.atoms();
    let integrand = |k: f64| {
        let (mut re, mut im) = ((k * shift).cos(), (k * shift).sin());
        for &c in &coeffs {
            let (mut cr, mut ci) = (0.0, 0.0);
            for a in atoms {
                let t = k * c * a.value;
                cr += a.probability * t.cos();
                ci += a.probability * t.sin();
            }
            (re, im) = (re * cr - im * ci, re * ci + im * cr);
        }
        let weight = (-k * k / 8.0).exp() / (2.0 * (2.0 * PI).sqrt());
        [weight * re, 0.0, 0.0]
    };
    // The Gaussian weight is below 1e-31 past k = 24; the integrand is even in
    // its real part.
    let half = integrate_gk15(&integrand, 0.0, 24.0, 1e-16)[0];
    Ok((2.0 / PI).sqrt() * 2.0 * half)
}

/// Deterministic part and increment coefficients of the end momentum,
/// read off a linear step map by probing it with unit vectors.
fn momentum_coefficients(stepper: &Stepper, init: &State, steps: usize) -> (f64, Vec<f64>) {
    let r = stepper.increments_per_step();
    let zero_xi = vec![0.0; r];
    let apply = |q: f64, p: f64, xi: &[f64]| {
        let mut s = State::new(&[q], &[p]).expect("one-dimensional state");
        stepper.advance(&mut s, xi);
        (s.q[0], s.p[0])
    };
    // X⁺ = A X + B ξ
    let a_col_q = apply(1.0, 0.0, &zero_xi);
    let a_col_p = apply(0.0, 1.0, &zero_xi);
    let b_cols: Vec<(f64, f64)> = (0..r)
        .map(|j| {
            let mut e = vec![0.0; r];
            e[j] = 1.0;
            apply(0.0, 0.0, &e)
        })
        .collect();

    let (mut q, mut p) = (init.q[0], init.p[0]);
    for _ in 0..steps {
        (q, p) = (a_col_q.0 * q + a_col_p.0 * p, a_col_q.1 * q + a_col_p.1 * p);
    }
    // Row vector w = e_pᵀ A^{M−1−n}, built backwards from the last step.
    let mut coeffs = vec![0.0; steps * r];
    let (mut wq, mut wp) = (0.0, 1.0);
    for n in (0..steps).rev() {
        for (j, b) in b_cols.iter().enumerate() {
            coeffs[n * r + j] = wq * b.0 + wp * b.1;
        }
        (wq, wp) = (wq * a_col_q.0 + wp * a_col_q.1, wq * a_col_p.0 + wp * a_col_p.1);
    }
    (p, coeffs)
}
