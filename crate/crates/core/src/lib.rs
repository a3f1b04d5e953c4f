//! Multilevel Monte Carlo estimation of end-time functionals of the Langevin
//! equation
//!
//! ```text
//! dP = -λP dt - ∇V(Q) dt + σ dW,    dQ = P dt
//! ```
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: potentials, quantities of interest and the closed-form law of
//!   the damped harmonic oscillator.
//! - [`increments`]: reproducible streams of standardised increments
//!   (Gaussian, three-point, four-point) and the fine-to-coarse combiners.
//! - [`integrators`]: Euler–Maruyama and the two splitting schemes built on the
//!   exact Ornstein–Uhlenbeck flow, single paths and coupled fine/coarse pairs.
//! - [`exact_coarse`]: sampling-free expectation of the coarsest level by
//!   depth-first enumeration of the discrete probability tree.
//! - [`mlmc`]: the adaptive driver, level calibration, Richardson
//!   extrapolation and the inter-level bias introduced by discrete increments.

pub mod error;
pub mod exact_coarse;
pub mod increments;
pub mod integrators;
pub mod mlmc;
pub mod model;
pub mod summation;

pub use error::{Error, Result};
pub use increments::{DistributionKind, IncrementSource, OuCoupling};
pub use integrators::{CoupledSample, PathConfig, Scheme};
pub use mlmc::{ErrorSplit, LevelStats, MlmcConfig, MlmcResult};
pub use model::{GaussianLaw, LangevinModel, Potential, QoI, State};
