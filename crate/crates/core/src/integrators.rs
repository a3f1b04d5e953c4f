//! One-step maps and path evolution for the Langevin equation.
//!
//! Three fixed-step schemes are provided:
//!
//! - Euler–Maruyama, weak order one.
//! - Symplectic Euler/OU: exact OU flow over `h`, kick with `∇V(Qₙ)`, then
//!   drift with the updated momentum (Lie–Trotter, weak order one).
//! - Störmer–Verlet/OU: exact OU over `h/2`, velocity Verlet over `h`, exact
//!   OU over `h/2` (Strang, weak order two). Each step consumes two increment
//!   vectors, drawn in the order `ξₙ` then `ξₙ₊½`.
//!
//! A coupled fine/coarse pair evolves the fine path with step `h` and the coarse
//! path with step `2h`, building each coarse increment from the two fine
//! increments it spans.

use crate::error::{Error, Result};
use crate::increments::{ou_alpha, IncrementSource, OuCoupling};
use crate::model::{LangevinModel, Potential, QoI, State, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    EulerMaruyama,
    SymplecticEulerOU,
    StormerVerletOU,
}

impl Scheme {
    /// Increment vectors consumed per step.
    pub fn draws_per_step(self) -> usize {
        match self {
            Scheme::EulerMaruyama | Scheme::SymplecticEulerOU => 1,
            Scheme::StormerVerletOU => 2,
        }
    }

    pub fn weak_order(self) -> f64 {
        match self {
            Scheme::EulerMaruyama | Scheme::SymplecticEulerOU => 1.0,
            Scheme::StormerVerletOU => 2.0,
        }
    }
}

/// A fixed-step discretisation of `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathConfig {
    pub scheme: Scheme,
    pub steps: usize,
    pub h: f64,
}

impl PathConfig {
    pub fn new(scheme: Scheme, model: &LangevinModel, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("a path needs at least one step"));
        }
        Ok(Self {
            scheme,
            steps,
            h: model.t_end() / steps as f64,
        })
    }
}

/// `φ` at the end time of a coupled fine/coarse pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoupledSample {
    pub fine_value: f64,
    pub coarse_value: f64,
    /// `fine_value − coarse_value`
    pub y: f64,
}

impl CoupledSample {
    pub fn new(fine_value: f64, coarse_value: f64) -> Self {
        Self {
            fine_value,
            coarse_value,
            y: fine_value - coarse_value,
        }
    }
}

/// Precomputed coefficients of one scheme at one step size.
#[derive(Clone, Debug)]
pub(crate) struct Stepper {
    scheme: Scheme,
    potential: Potential,
    lambda: f64,
    h: f64,
    dim: usize,
    /// EM: unused. SE: `e^{−λh}`. SV: `e^{−λh/2}`.
    decay: f64,
    /// EM: `σ√h`. SE: `σα_h`. SV: `σα_{h/2}`.
    noise: f64,
}

impl Stepper {
    pub(crate) fn new(scheme: Scheme, model: &LangevinModel, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("step size must be positive, got {h}")));
        }
        let lambda = model.lambda();
        let sigma = model.sigma();
        let (decay, noise) = match scheme {
            Scheme::EulerMaruyama => (0.0, sigma * h.sqrt()),
            Scheme::SymplecticEulerOU => ((-lambda * h).exp(), sigma * ou_alpha(lambda, h)),
            Scheme::StormerVerletOU => ((-0.5 * lambda * h).exp(), sigma * ou_alpha(lambda, 0.5 * h)),
        };
        Ok(Self {
            scheme,
            potential: *model.potential(),
            lambda,
            h,
            dim: model.dim(),
            decay,
            noise,
        })
    }

    /// Increment values consumed per step (`draws_per_step · d`).
    pub(crate) fn increments_per_step(&self) -> usize {
        self.scheme.draws_per_step() * self.dim
    }

    /// Advances `state` by one step; `xi` holds `increments_per_step()` values.
    #[inline]
    pub(crate) fn advance(&self, state: &mut State, xi: &[f64]) {
        let d = self.dim;
        let h = self.h;
        let mut grad = Vector::from_elem(0.0, d);
        match self.scheme {
            Scheme::EulerMaruyama => {
                self.potential.gradient_into(&state.q, &mut grad);
                for i in 0..d {
                    let p = state.p[i];
                    state.p[i] = p - (self.lambda * p + grad[i]) * h + self.noise * xi[i];
                    state.q[i] += p * h;
                }
            }
            Scheme::SymplecticEulerOU => {
                self.potential.gradient_into(&state.q, &mut grad);
                for i in 0..d {
                    let p_star = self.decay * state.p[i] + self.noise * xi[i];
                    let p = p_star - h * grad[i];
                    state.p[i] = p;
                    state.q[i] += p * h;
                }
            }
            Scheme::StormerVerletOU => {
                let half = 0.5 * h;
                self.potential.gradient_into(&state.q, &mut grad);
                for i in 0..d {
                    let p_star = self.decay * state.p[i] + self.noise * xi[i];
                    let p_half = p_star - half * grad[i];
                    state.p[i] = p_half;
                    state.q[i] += h * p_half;
                }
                self.potential.gradient_into(&state.q, &mut grad);
                for i in 0..d {
                    let p_star = state.p[i] - half * grad[i];
                    state.p[i] = self.decay * p_star + self.noise * xi[d + i];
                }
            }
        }
    }
}

/// One step of `scheme` from `state` with step `h`.
///
/// `xi` carries `draws_per_step · d` standardised increments; for
/// Störmer–Verlet/OU the first `d` are `ξₙ` and the next `d` are `ξₙ₊½`.
pub fn step(scheme: Scheme, model: &LangevinModel, state: &State, h: f64, xi: &[f64]) -> Result<State> {
    let d = model.dim();
    if state.dim() != d || state.p.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: state.dim(),
        });
    }
    let expected = scheme.draws_per_step() * d;
    if xi.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: xi.len(),
        });
    }
    let stepper = Stepper::new(scheme, model, h)?;
    let mut next = state.clone();
    stepper.advance(&mut next, xi);
    Ok(next)
}

/// Exact-in-law OU update `e^{−λh}p + σα_h ξ`.
pub fn ou_exact_step(p: &[f64], h: f64, lambda: f64, sigma: f64, xi: &[f64]) -> Result<Vector> {
    if !(h > 0.0) || !(lambda > 0.0) {
        return Err(Error::invalid(format!("need h > 0 and λ > 0, got h = {h}, λ = {lambda}")));
    }
    if p.len() != xi.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: xi.len(),
        });
    }
    let decay = (-lambda * h).exp();
    let noise = sigma * ou_alpha(lambda, h);
    Ok(p.iter().zip(xi).map(|(p, x)| decay * p + noise * x).collect())
}

/// How two fine increments merge into one coarse increment.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Combiner {
    Brownian,
    Ou(OuCoupling),
}

impl Combiner {
    /// The merge rule for fine steps of size `h_fine` under `scheme`.
    pub(crate) fn for_scheme(scheme: Scheme, lambda: f64, h_fine: f64) -> Result<Self> {
        Ok(match scheme {
            Scheme::EulerMaruyama => Combiner::Brownian,
            Scheme::SymplecticEulerOU => Combiner::Ou(OuCoupling::new(lambda, h_fine)?),
            // Each OU half-kick family: two substeps of h/2 merge into one of h.
            Scheme::StormerVerletOU => Combiner::Ou(OuCoupling::new(lambda, 0.5 * h_fine)?),
        })
    }

    #[inline]
    pub(crate) fn combine(&self, a: f64, b: f64) -> f64 {
        match self {
            Combiner::Brownian => (a + b) * std::f64::consts::FRAC_1_SQRT_2,
            Combiner::Ou(cpl) => cpl.combine_scalar(a, b),
        }
    }
}

/// Everything needed to sample one level repeatedly without recomputing
/// coefficients.
#[derive(Clone, Debug)]
pub(crate) struct LevelKernel {
    fine: Stepper,
    coarse: Option<(Stepper, Combiner)>,
    steps: usize,
    initial: State,
}

/// Increment scratch space; `d·r ≤ 8` stays on the stack.
type Scratch = smallvec::SmallVec<[f64; 8]>;

impl LevelKernel {
    pub(crate) fn single(scheme: Scheme, model: &LangevinModel, steps: usize) -> Result<Self> {
        let cfg = PathConfig::new(scheme, model, steps)?;
        Ok(Self {
            fine: Stepper::new(scheme, model, cfg.h)?,
            coarse: None,
            steps,
            initial: model.initial_state(),
        })
    }

    pub(crate) fn pair(scheme: Scheme, model: &LangevinModel, fine_steps: usize) -> Result<Self> {
        if fine_steps == 0 || fine_steps % 2 != 0 {
            return Err(Error::invalid(format!(
                "coupled pairs need an even positive number of fine steps, got {fine_steps}"
            )));
        }
        let cfg = PathConfig::new(scheme, model, fine_steps)?;
        Ok(Self {
            fine: Stepper::new(scheme, model, cfg.h)?,
            coarse: Some((
                Stepper::new(scheme, model, 2.0 * cfg.h)?,
                Combiner::for_scheme(scheme, model.lambda(), cfg.h)?,
            )),
            steps: fine_steps,
            initial: model.initial_state(),
        })
    }

    pub(crate) fn run_single(&self, src: &mut IncrementSource, qoi: &QoI) -> f64 {
        let n = self.fine.increments_per_step();
        let mut xi = Scratch::from_elem(0.0, n);
        let mut state = self.initial.clone();
        for _ in 0..self.steps {
            src.fill(&mut xi);
            self.fine.advance(&mut state, &xi);
        }
        qoi.evaluate(&state)
    }

    pub(crate) fn run_pair(&self, src: &mut IncrementSource, qoi: &QoI) -> CoupledSample {
        let (coarse_stepper, combiner) = self.coarse.as_ref().expect("kernel built with LevelKernel::pair");
        let n = self.fine.increments_per_step();
        let mut xi1 = Scratch::from_elem(0.0, n);
        let mut xi2 = Scratch::from_elem(0.0, n);
        let mut xic = Scratch::from_elem(0.0, n);
        let mut fine = self.initial.clone();
        let mut coarse = self.initial.clone();
        for _ in 0..self.steps / 2 {
            src.fill(&mut xi1);
            self.fine.advance(&mut fine, &xi1);
            src.fill(&mut xi2);
            self.fine.advance(&mut fine, &xi2);
            // Component-wise merge keeps the ξₙ and ξₙ₊½ families separate.
            for k in 0..n {
                xic[k] = combiner.combine(xi1[k], xi2[k]);
            }
            coarse_stepper.advance(&mut coarse, &xic);
        }
        CoupledSample::new(qoi.evaluate(&fine), qoi.evaluate(&coarse))
    }
}

/// `φ(X_M)` for one path of `steps` steps of size `T/steps`.
pub fn single_path(
    scheme: Scheme,
    model: &LangevinModel,
    steps: usize,
    src: &mut IncrementSource,
    qoi: &QoI,
) -> Result<f64> {
    Ok(LevelKernel::single(scheme, model, steps)?.run_single(src, qoi))
}

/// One coupled sample: a fine path of `fine_steps` steps and a coarse path of
/// `fine_steps / 2` steps driven by the merged fine increments.
pub fn coupled_pair(
    scheme: Scheme,
    model: &LangevinModel,
    fine_steps: usize,
    src: &mut IncrementSource,
    qoi: &QoI,
) -> Result<CoupledSample> {
    Ok(LevelKernel::pair(scheme, model, fine_steps)?.run_pair(src, qoi))
}
