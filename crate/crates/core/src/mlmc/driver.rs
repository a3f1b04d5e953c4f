use std::time::Instant;

use super::config::{ErrorSplit, MlmcConfig};
use super::stats::{LevelStats, Partial};
use super::sum_range;
use crate::error::{Error, Result};
use crate::exact_coarse::enumerate;
use crate::increments::{stream_id, DistributionKind, IncrementSource};
use crate::integrators::{LevelKernel, Scheme};
use crate::model::{LangevinModel, QoI};

#[derive(Clone, Debug, PartialEq)]
pub struct MlmcResult {
    /// `Σ_ℓ Ŷ_ℓ`, plus the extrapolation correction when enabled.
    pub estimate: f64,
    /// `Σ_ℓ Ŷ_ℓ` without extrapolation.
    pub plain_estimate: f64,
    pub per_level: Vec<LevelStats>,
    /// Estimated finest-level bias; NaN when too few levels to estimate it.
    pub bias_est: f64,
    /// `√(Σ_ℓ V̂_ℓ / N_ℓ)`
    pub stat_error_est: f64,
    /// Work units: integrator steps, or tree nodes on an enumerated level.
    pub total_cost: f64,
    pub wall_time: f64,
    pub inter_level_bias: Option<f64>,
    pub rounds: usize,
}

/// Sample targets with the bias/variance split, `k = 2`.
pub fn optimal_n(stats: &[LevelStats], eps: f64) -> Result<Vec<u64>> {
    optimal_n_with(stats, eps, ErrorSplit::BiasVariance)
}

pub fn optimal_n_with(stats: &[LevelStats], eps: f64, split: ErrorSplit) -> Result<Vec<u64>> {
    Ok(optimal_n_unrounded(stats, eps, split)?
        .into_iter()
        .map(|x| x.ceil() as u64)
        .collect())
}

/// Sample targets before the ceiling. Exactly evaluated levels get zero and
/// are left out of the sum.
pub fn optimal_n_unrounded(stats: &[LevelStats], eps: f64, split: ErrorSplit) -> Result<Vec<f64>> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    let vh = stats
        .iter()
        .map(|s| Ok((s.vhat()?, s.h)))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = stats
        .iter()
        .zip(&vh)
        .filter(|(s, _)| !s.is_exact())
        .map(|(_, (v, h))| (v / h).sqrt())
        .sum();
    let k = split.parts() / (eps * eps);
    Ok(stats
        .iter()
        .zip(&vh)
        .map(|(s, (v, h))| if s.is_exact() { 0.0 } else { k * (v * h).sqrt() * sum })
        .collect())
}

/// Richardson combination of the two finest levels: `Σ Ŷ + Ŷ_L/(2^α − 1)`.
pub fn extrapolate(result: &MlmcResult, alpha: f64) -> Result<f64> {
    if alpha != 1.0 && alpha != 2.0 {
        return Err(Error::Unsupported(format!("extrapolation for weak order {alpha}")));
    }
    let finest = match result.per_level.as_slice() {
        [.., last] if result.per_level.len() >= 2 => last,
        _ => return Err(Error::invalid("extrapolation needs at least two levels")),
    };
    Ok(result.plain_estimate + finest.yhat() / (2f64.powf(alpha) - 1.0))
}

/// Finest-level bias implied by the level means, assuming an error expansion
/// in `h^α` (plain) or `h^{2α}` after extrapolation.
fn bias_estimate(per_level: &[LevelStats], alpha: f64, extrapolated: bool) -> f64 {
    let n = per_level.len();
    let a = 2f64.powf(alpha);
    if !extrapolated {
        if n < 2 {
            return f64::NAN;
        }
        return per_level[n - 1].yhat().abs() / (a - 1.0);
    }
    if n < 3 {
        return f64::NAN;
    }
    let b = a * a;
    let d = per_level[n - 1].yhat() - per_level[n - 2].yhat() / a;
    d.abs() * (b - a) / ((a - 1.0) * (b - 1.0) * (b / a - 1.0))
}

struct Level {
    kernel: LevelKernel,
    cost_per_sample: f64,
}

/// Runs the adaptive estimator for fixed `L` and `ε`.
pub fn run(config: &MlmcConfig, model: &LangevinModel, qoi: &QoI, seed: u64) -> Result<MlmcResult> {
    config.validate()?;
    let started = Instant::now();
    let t_end = model.t_end();
    let top = config.levels;

    let mut stats: Vec<LevelStats> = Vec::with_capacity(top + 1);
    let mut levels: Vec<Option<Level>> = Vec::with_capacity(top + 1);
    for l in 0..=top {
        let steps = config.steps(l);
        let h = config.h(l, t_end);
        if l == 0 && config.exact_coarse {
            let law = config.dist.discrete_law().expect("validated discrete law");
            let e = enumerate(model, config.scheme, qoi, steps, &law, config.leaf_budget)?;
            if !e.value.is_finite() {
                return Err(Error::NonFinite { level: 0 });
            }
            stats.push(LevelStats::exact(0, h, e.value, e.nodes as f64));
            levels.push(None);
            continue;
        }
        let (kernel, cost_per_sample) = if l == 0 {
            (LevelKernel::single(config.scheme, model, steps)?, steps as f64)
        } else {
            (LevelKernel::pair(config.scheme, model, steps)?, 1.5 * steps as f64)
        };
        stats.push(LevelStats::new(l, h));
        levels.push(Some(Level { kernel, cost_per_sample }));
    }

    let mut targets: Vec<u64> = stats
        .iter()
        .map(|s| if s.is_exact() { 0 } else { config.n_min })
        .collect();
    let mut rounds = 0;
    loop {
        rounds += 1;
        for l in (0..=top).rev() {
            let Some(level) = &levels[l] else { continue };
            let have = stats[l].n;
            if have < targets[l] {
                let part = sample_level(level, l, have, targets[l], config, qoi, seed);
                if !part.finite {
                    return Err(Error::NonFinite { level: l });
                }
                stats[l].absorb(&part, level.cost_per_sample);
            }
        }
        targets = optimal_n_with(&stats, config.eps, config.split)?;
        let done = stats.iter().zip(&targets).all(|(s, &t)| s.n >= t);
        if done || rounds >= config.max_rounds {
            let result = assemble(config, stats, started, rounds);
            if done {
                return Ok(result);
            }
            return Err(Error::NotConverged {
                rounds,
                partial: Box::new(result),
            });
        }
    }
}

/// Plain single-level Monte Carlo: `n` paths of `steps` steps, sample `i` on
/// stream `stream_id(0, i)`.
pub fn single_level(
    scheme: Scheme,
    dist: DistributionKind,
    model: &LangevinModel,
    qoi: &QoI,
    steps: usize,
    n: u64,
    seed: u64,
) -> Result<LevelStats> {
    let kernel = LevelKernel::single(scheme, model, steps)?;
    let part = sum_range(0, n, |i| {
        let mut src = IncrementSource::new(dist, seed, stream_id(0, i));
        kernel.run_single(&mut src, qoi)
    });
    if !part.finite {
        return Err(Error::NonFinite { level: 0 });
    }
    let mut s = LevelStats::new(0, model.t_end() / steps as f64);
    s.absorb(&part, steps as f64);
    Ok(s)
}

fn sample_level(
    level: &Level,
    l: usize,
    start: u64,
    end: u64,
    config: &MlmcConfig,
    qoi: &QoI,
    seed: u64,
) -> Partial {
    let dist = config.dist;
    if l == 0 {
        sum_range(start, end, |i| {
            let mut src = IncrementSource::new(dist, seed, stream_id(l, i));
            level.kernel.run_single(&mut src, qoi)
        })
    } else {
        sum_range(start, end, |i| {
            let mut src = IncrementSource::new(dist, seed, stream_id(l, i));
            level.kernel.run_pair(&mut src, qoi).y
        })
    }
}

fn assemble(config: &MlmcConfig, per_level: Vec<LevelStats>, started: Instant, rounds: usize) -> MlmcResult {
    let plain: f64 = per_level.iter().map(LevelStats::yhat).sum();
    let estimate = if config.extrapolate {
        let finest = per_level.last().expect("at least one level");
        plain + finest.yhat() / (2f64.powf(config.alpha) - 1.0)
    } else {
        plain
    };
    let var: f64 = per_level.iter().map(|s| s.mean_variance().unwrap_or(f64::NAN)).sum();
    MlmcResult {
        estimate,
        plain_estimate: plain,
        bias_est: bias_estimate(&per_level, config.alpha, config.extrapolate),
        stat_error_est: var.sqrt(),
        total_cost: per_level.iter().map(|s| s.cost).sum(),
        wall_time: started.elapsed().as_secs_f64(),
        inter_level_bias: None,
        rounds,
        per_level,
    }
}
