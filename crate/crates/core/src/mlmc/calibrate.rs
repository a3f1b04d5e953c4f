use super::config::{ErrorSplit, MlmcConfig};
use super::stats::LevelStats;
use super::sum_range;
use crate::error::{Error, Result};
use crate::increments::{mix_seed, stream_id, IncrementSource};
use crate::integrators::LevelKernel;
use crate::model::{LangevinModel, QoI};

/// What the calibration solves for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CalibrationTarget {
    /// Given `ε_max`, the smallest `L` whose bias meets the budget.
    Levels { eps: f64 },
    /// Given `L`, the tolerance the bias allows.
    Eps { levels: usize },
    /// Given `ε_max` and the configured `L`, the smallest coarsest step count.
    CoarseSteps { eps: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// `|c̃₁|` in `bias ≈ c₁ h^α`.
    pub c1: f64,
    /// Order of the bias expansion: `α`, or `2α` after extrapolation.
    pub order: f64,
    pub levels: usize,
    pub m0: usize,
    /// `√k` times the predicted finest-level bias: the `ε` to run with. It
    /// never exceeds the requested tolerance.
    pub eps: f64,
    /// Pilot statistics, coarsest first.
    pub pilot: Vec<LevelStats>,
}

/// `c̃₁ = Ŷ_ℓ / ((1 − 2^α) h_ℓ^α)`
pub fn c1_from_yhat(yhat: f64, alpha: f64, h: f64) -> f64 {
    yhat / ((1.0 - 2f64.powf(alpha)) * h.powf(alpha))
}

/// Smallest `L ≥ 0` with `√k · c₁ (T/(M0 2^L))^α ≤ ε`, `k` the split's parts.
pub fn levels_for_eps(c1: f64, alpha: f64, t_end: f64, m0: usize, eps: f64, split: ErrorSplit) -> usize {
    let ratio = split.parts().sqrt() * c1 * (t_end / m0 as f64).powf(alpha) / eps;
    if ratio <= 1.0 {
        return 0;
    }
    (ratio.log2() / alpha).ceil() as usize
}

/// `ε = √k · c₁ h_L^α`
pub fn eps_for_levels(c1: f64, alpha: f64, h_finest: f64, split: ErrorSplit) -> f64 {
    split.parts().sqrt() * c1 * h_finest.powf(alpha)
}

/// Smallest `M0` with `√k · c₁ (T/(M0 2^L))^α ≤ ε`.
pub fn coarse_steps_for_eps(c1: f64, alpha: f64, t_end: f64, levels: usize, eps: f64, split: ErrorSplit) -> usize {
    let h = (eps / (split.parts().sqrt() * c1)).powf(1.0 / alpha);
    ((t_end / (h * (1u64 << levels) as f64)).ceil() as usize).max(1)
}

/// Pilot level used by [`calibrate_levels`].
pub const DEFAULT_PILOT_LEVEL: usize = 2;

/// [`calibrate_at`] with the pilot at [`DEFAULT_PILOT_LEVEL`].
pub fn calibrate_levels(
    config: &MlmcConfig,
    model: &LangevinModel,
    qoi: &QoI,
    pilot_samples: u64,
    seed: u64,
    target: CalibrationTarget,
) -> Result<Calibration> {
    calibrate_at(config, model, qoi, pilot_samples, seed, target, DEFAULT_PILOT_LEVEL)
}

/// Estimates the bias constant from pilot samples and solves for `target`.
///
/// The pilot samples level `pilot_level`, and the next one too when
/// `config.extrapolate` is set, in which case the extrapolated means
/// `E_ℓ = Σ_{j≤ℓ} Ŷ_j + Ŷ_ℓ/(2^α − 1)` are assumed to carry a bias of order `2α`.
pub fn calibrate_at(
    config: &MlmcConfig,
    model: &LangevinModel,
    qoi: &QoI,
    pilot_samples: u64,
    seed: u64,
    target: CalibrationTarget,
    pilot_level: usize,
) -> Result<Calibration> {
    if pilot_level == 0 {
        return Err(Error::invalid("the pilot level must be at least 1"));
    }
    if pilot_samples < 100 {
        return Err(Error::invalid(format!("need at least 100 pilot samples, got {pilot_samples}")));
    }
    let pilot_seed = mix_seed(seed, 0xCA11_B4A7);
    let t_end = model.t_end();
    let pilot_levels = if config.extrapolate { pilot_level..=pilot_level + 1 } else { pilot_level..=pilot_level };
    let mut pilot = Vec::new();
    for l in pilot_levels {
        let steps = config.steps(l);
        let kernel = LevelKernel::pair(config.scheme, model, steps)?;
        let part = sum_range(0, pilot_samples, |i| {
            let mut src = IncrementSource::new(config.dist, pilot_seed, stream_id(l, i));
            kernel.run_pair(&mut src, qoi).y
        });
        if !part.finite {
            return Err(Error::NonFinite { level: l });
        }
        let mut s = LevelStats::new(l, config.h(l, t_end));
        s.absorb(&part, 1.5 * steps as f64);
        pilot.push(s);
    }

    let alpha = config.alpha;
    let (signal, stderr, order, h) = if config.extrapolate {
        let g = 1.0 / (2f64.powf(alpha) - 1.0);
        let (y1, y2) = (&pilot[0], &pilot[1]);
        let z = y2.yhat() + g * (y2.yhat() - y1.yhat());
        let var = (1.0 + g).powi(2) * y2.mean_variance()? + g * g * y1.mean_variance()?;
        (z, var.sqrt(), 2.0 * alpha, y2.h)
    } else {
        let y = &pilot[0];
        (y.yhat(), y.mean_variance()?.sqrt(), alpha, y.h)
    };
    if !(signal.abs() > 2.0 * stderr) {
        return Err(Error::Calibration(format!(
            "pilot level mean {signal:.3e} is within two standard errors ({stderr:.3e}) of zero"
        )));
    }
    let c1 = c1_from_yhat(signal, order, h).abs();

    let (levels, m0) = match target {
        CalibrationTarget::Levels { eps } => {
            let l = levels_for_eps(c1, order, t_end, config.m0, eps, config.split);
            // Extrapolation combines the two finest levels.
            (if config.extrapolate { l.max(1) } else { l }, config.m0)
        }
        CalibrationTarget::Eps { levels } => (levels, config.m0),
        CalibrationTarget::CoarseSteps { eps } => (
            config.levels,
            coarse_steps_for_eps(c1, order, t_end, config.levels, eps, config.split),
        ),
    };
    let h_finest = t_end / (m0 << levels) as f64;
    let eps = eps_for_levels(c1, order, h_finest, config.split);
    Ok(Calibration {
        c1,
        order,
        levels,
        m0,
        eps,
        pilot,
    })
}
