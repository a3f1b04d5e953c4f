//! Experiment suites: calibrate, run every method at every tolerance, and
//! collect the CSV rows.

use std::path::Path;

use anyhow::{bail, Context, Result};
use langevin_mlmc::exact_coarse::{enumerate, DEFAULT_LEAF_BUDGET};
use langevin_mlmc::increments::mix_seed;
use langevin_mlmc::mlmc::{
    calibrate_at, inter_level_bias, run, single_level, BiasMethod, Calibration, CalibrationTarget,
};
use langevin_mlmc::{Error, LangevinModel, MlmcConfig, MlmcResult, QoI, Scheme};

use crate::method::{LevelRule, MethodSetup, MethodTag};
use crate::output::{write_rows, BiasRow, CalibrationRow, ExactRow, LevelRow, RunRow, Sig17};
use crate::spec::ExperimentSpec;
use crate::timing::timed;

pub const RUNS_CSV: &str = "runs.csv";
pub const LEVELS_CSV: &str = "levels.csv";
pub const BIAS_CSV: &str = "bias.csv";
pub const EXACT_CSV: &str = "exact.csv";
pub const CALIBRATION_CSV: &str = "calibration.csv";
pub const MC_CSV: &str = "mc_baseline.csv";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteOutput {
    pub runs: Vec<RunRow>,
    pub levels: Vec<LevelRow>,
    pub bias: Vec<BiasRow>,
}

/// A calibrated estimator: the configuration to run plus the pilot fit.
#[derive(Clone, Debug)]
pub struct Calibrated {
    pub config: MlmcConfig,
    pub calibration: Calibration,
}

/// An insignificant pilot is retried with four and then sixteen times the
/// samples before calibration gives up.
const PILOT_GROWTH_CAP: u64 = 16;

fn leaf_budget(spec: &ExperimentSpec) -> u128 {
    spec.leaf_budget.map_or(DEFAULT_LEAF_BUDGET, u128::from)
}

fn calibration_seed(spec: &ExperimentSpec, t_ix: usize, eps_ix: usize) -> u64 {
    mix_seed(spec.seed, 0x00C0_0000 | ((t_ix as u64) << 16) | eps_ix as u64)
}

fn run_seed(spec: &ExperimentSpec, t_ix: usize, eps_ix: usize, repeat: u32) -> u64 {
    mix_seed(spec.seed, ((repeat as u64) << 32) | ((t_ix as u64) << 16) | eps_ix as u64)
}

/// Fits the bias constant and picks `L` (or `M0` under a fixed `L`) for `eps`.
pub fn calibrate(
    spec: &ExperimentSpec,
    setup: &MethodSetup,
    model: &LangevinModel,
    eps: f64,
    seed: u64,
) -> Result<Calibrated> {
    let mut base = setup.config(eps);
    base.m0 = spec.coarse_steps(setup.m0, model.t_end());
    base.leaf_budget = leaf_budget(spec);
    let pilot_level = spec.pilot_level.unwrap_or_else(|| setup.pilot_level());
    let target = match setup.rule {
        LevelRule::Levels => CalibrationTarget::Levels { eps },
        LevelRule::CoarseSteps { levels } => {
            base.levels = levels;
            CalibrationTarget::CoarseSteps { eps }
        }
    };
    let mut pilot = base.clone();
    if let LevelRule::CoarseSteps { .. } = setup.rule {
        // Pilot on the coarsest grid so the extrapolated bias is resolved.
        pilot.m0 = spec.coarse_steps(1, model.t_end());
    }
    let mut samples = spec.pilot_samples;
    let cal = loop {
        match calibrate_at(&pilot, model, &spec.qoi(), samples, seed, target, pilot_level) {
            Err(Error::Calibration(_)) if samples < PILOT_GROWTH_CAP * spec.pilot_samples => samples *= 4,
            // Too coarse a pilot grid for a stiff force; refine it.
            Err(Error::NonFinite { .. }) if pilot.m0 < base.m0.max(64) => pilot.m0 *= 2,
            other => break other?,
        }
    };
    let mut config = base;
    config.eps = cal.eps;
    config.levels = cal.levels;
    config.m0 = cal.m0;
    Ok(Calibrated {
        config,
        calibration: cal,
    })
}

/// Outcome of one estimator run, multilevel or plain.
struct Measured {
    result: MlmcResult,
    cpu_time: f64,
}

fn run_mlmc(config: &MlmcConfig, model: &LangevinModel, qoi: &QoI, seed: u64) -> Result<Measured> {
    let (r, _, cpu) = timed(|| run(config, model, qoi, seed));
    Ok(Measured {
        result: r?,
        cpu_time: cpu,
    })
}

/// Plain Monte Carlo at the finest step of `config`: a pilot fixes `V̂`, then
/// `N = ⌈2ε⁻²V̂⌉` fresh paths are drawn.
fn run_plain(
    spec: &ExperimentSpec,
    config: &MlmcConfig,
    model: &LangevinModel,
    qoi: &QoI,
    seed: u64,
) -> Result<Measured> {
    let steps = config.steps(config.levels);
    let pilot = single_level(config.scheme, config.dist, model, qoi, steps, spec.pilot_samples, mix_seed(seed, 1))?;
    let n = ((2.0 * pilot.vhat()? / (config.eps * config.eps)).ceil() as u64).max(2);
    let ((stats, wall), _, cpu) = timed(|| {
        let started = std::time::Instant::now();
        let s = single_level(config.scheme, config.dist, model, qoi, steps, n, seed);
        (s, started.elapsed().as_secs_f64())
    });
    let stats = stats?;
    let result = MlmcResult {
        estimate: stats.yhat(),
        plain_estimate: stats.yhat(),
        bias_est: f64::NAN,
        stat_error_est: stats.mean_variance()?.sqrt(),
        total_cost: stats.cost,
        wall_time: wall,
        inter_level_bias: None,
        rounds: 1,
        per_level: vec![stats],
    };
    Ok(Measured { result, cpu_time: cpu })
}

fn bias_rows(
    spec: &ExperimentSpec,
    tag: MethodTag,
    config: &MlmcConfig,
    model: &LangevinModel,
    levels: usize,
    seed: u64,
) -> Result<Vec<BiasRow>> {
    let method = BiasMethod::Auto {
        samples: spec.bias.samples,
        seed,
    };
    (0..levels)
        .map(|l| {
            let b = inter_level_bias(config, model, &spec.qoi(), l, method)?;
            Ok(BiasRow {
                method: tag,
                t_end: model.t_end().into(),
                level: l,
                h: b.h.into(),
                inter_level_bias: b.value.abs().into(),
                signed_bias: b.value.into(),
                stderr: b.stderr.into(),
                bias_method: format!("{:?}", b.method),
            })
        })
        .collect()
}

fn level_rows(tag: MethodTag, t_end: f64, eps: f64, repeat: u32, result: &MlmcResult) -> Vec<LevelRow> {
    result
        .per_level
        .iter()
        .map(|s| LevelRow {
            method: tag,
            t_end: t_end.into(),
            eps: eps.into(),
            repeat,
            level: s.level,
            h: s.h.into(),
            n: s.n,
            yhat: s.yhat().into(),
            vhat: if s.is_exact() { None } else { s.vhat().ok().map(Sig17) },
            cost: s.cost.into(),
            exact: s.is_exact(),
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn run_row(
    spec: &ExperimentSpec,
    tag: MethodTag,
    config: &MlmcConfig,
    t_end: f64,
    eps: f64,
    repeat: u32,
    seed: u64,
    m: &Measured,
    reference: Option<f64>,
) -> RunRow {
    let r = &m.result;
    let abs_err = reference.map(|v| (r.estimate - v).abs());
    RunRow {
        method: tag,
        problem: format!("{:?}", spec.problem),
        t_end: t_end.into(),
        eps: eps.into(),
        repeat,
        seed,
        levels: config.levels,
        m0: config.m0,
        run_eps: config.eps.into(),
        estimate: r.estimate.into(),
        reference: reference.map(Sig17),
        abs_error_vs_reference: abs_err.map(Sig17),
        error_over_eps: abs_err.map(|e| Sig17(e / eps)),
        error_plus_sd_over_eps: abs_err.map(|e| Sig17((e + r.stat_error_est) / eps)),
        stat_error: r.stat_error_est.into(),
        bias_est: r.bias_est.into(),
        inter_level_bias: r.inter_level_bias.map(Sig17),
        total_cost: r.total_cost.into(),
        wall_time: r.wall_time.into(),
        cpu_time: m.cpu_time.into(),
        walltime_times_eps2: (r.wall_time * eps * eps).into(),
        cputime_times_eps2: (m.cpu_time * eps * eps).into(),
        walltime_times_eps2_over_t: (r.wall_time * eps * eps / t_end).into(),
        rounds: r.rounds,
    }
}

/// Every listed method, end time, tolerance and replication; nothing is
/// written.
pub fn execute(spec: &ExperimentSpec) -> Result<SuiteOutput> {
    execute_filtered(spec, |_| true)
}

fn execute_filtered(spec: &ExperimentSpec, keep: impl Fn(MethodTag) -> bool) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let qoi = spec.qoi();
    for &tag in spec.methods.iter().filter(|&&t| keep(t)) {
        let setup = tag.setup();
        for (t_ix, &t_end) in spec.t_values().iter().enumerate() {
            let model = spec.model(t_end)?;
            let reference = spec.reference(t_end)?;
            for (eps_ix, &eps) in spec.eps.iter().enumerate() {
                let cal = calibrate(spec, &setup, &model, eps, calibration_seed(spec, t_ix, eps_ix))
                    .with_context(|| format!("calibrating {tag} at eps {eps:e}, T = {t_end}"))?;
                let cfg = &cal.config;
                let bias = if setup.dist.is_discrete() {
                    let rows = bias_rows(spec, tag, cfg, &model, cfg.levels, calibration_seed(spec, t_ix, eps_ix))?;
                    let total = rows.iter().fold(0.0, |acc, b| acc + b.signed_bias.0);
                    out.bias.extend(rows);
                    Some(total)
                } else {
                    None
                };
                for repeat in 0..spec.repeat {
                    let seed = run_seed(spec, t_ix, eps_ix, repeat);
                    let mut m = if setup.single_level {
                        run_plain(spec, cfg, &model, &qoi, seed)?
                    } else {
                        run_mlmc(cfg, &model, &qoi, seed).with_context(|| format!("running {tag} at eps {eps:e}"))?
                    };
                    m.result.inter_level_bias = bias;
                    out.levels.extend(level_rows(tag, t_end, eps, repeat, &m.result));
                    out.runs.push(run_row(spec, tag, cfg, t_end, eps, repeat, seed, &m, reference));
                }
            }
        }
    }
    Ok(out)
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

/// Runs the suite and writes `runs.csv` and `levels.csv` into `out`, plus
/// `bias.csv` for discrete methods and `mc_baseline.csv` for `MC-EMG`.
pub fn run_suite(spec: &ExperimentSpec, out: &Path) -> Result<SuiteOutput> {
    ensure_dir(out)?;
    let res = execute(spec)?;
    write_rows(&out.join(RUNS_CSV), &res.runs)?;
    write_rows(&out.join(LEVELS_CSV), &res.levels)?;
    if !res.bias.is_empty() {
        write_rows(&out.join(BIAS_CSV), &res.bias)?;
    }
    let mc: Vec<RunRow> = res.runs.iter().filter(|r| r.method == MethodTag::McEmg).cloned().collect();
    if !mc.is_empty() {
        write_rows(&out.join(MC_CSV), &mc)?;
    }
    Ok(res)
}

/// Runs the `MC-EMG` entries of `spec` alone and writes `mc_baseline.csv`.
pub fn mc_baseline(spec: &ExperimentSpec, out: &Path) -> Result<Vec<RunRow>> {
    if !spec.methods.contains(&MethodTag::McEmg) {
        bail!("the baseline needs method MC-EMG in the experiment");
    }
    ensure_dir(out)?;
    let res = execute_filtered(spec, |t| t == MethodTag::McEmg)?;
    write_rows(&out.join(MC_CSV), &res.runs)?;
    Ok(res.runs)
}

/// Inter-level bias of every discrete method over levels `0..bias.levels`.
pub fn bias_sweep(spec: &ExperimentSpec, out: &Path) -> Result<Vec<BiasRow>> {
    let tags: Vec<MethodTag> = spec.methods.iter().copied().filter(|t| t.is_discrete()).collect();
    if tags.is_empty() {
        bail!("the bias sweep needs at least one discrete method (SE3-, SE3, SE3+, SE4)");
    }
    ensure_dir(out)?;
    let mut rows = Vec::new();
    for tag in tags {
        for (t_ix, &t_end) in spec.t_values().iter().enumerate() {
            let model = spec.model(t_end)?;
            let mut cfg = tag.setup().config(spec.eps[0]);
            cfg.m0 = spec.coarse_steps(cfg.m0, t_end);
            cfg.levels = spec.bias.levels;
            rows.extend(bias_rows(spec, tag, &cfg, &model, spec.bias.levels, calibration_seed(spec, t_ix, 0))?);
        }
    }
    write_rows(&out.join(BIAS_CSV), &rows)?;
    Ok(rows)
}

/// Enumerated coarsest-level expectation of every discrete method.
pub fn exact_table(spec: &ExperimentSpec, out: &Path) -> Result<Vec<ExactRow>> {
    let tags: Vec<MethodTag> = spec.methods.iter().copied().filter(|t| t.is_discrete()).collect();
    if tags.is_empty() {
        bail!("coarse enumeration needs at least one discrete method (SE3-, SE3, SE3+, SE4)");
    }
    ensure_dir(out)?;
    let mut rows = Vec::new();
    for tag in tags {
        let setup = tag.setup();
        let law = setup.dist.discrete_law().expect("discrete method");
        for &t_end in &spec.t_values() {
            let model = spec.model(t_end)?;
            let m0 = spec.coarse_steps(setup.m0, t_end);
            let (e, wall, _) = timed(|| enumerate(&model, setup.scheme, &spec.qoi(), m0, &law, leaf_budget(spec)));
            let e = e?;
            rows.push(ExactRow {
                method: tag,
                t_end: t_end.into(),
                m0,
                value: e.value.into(),
                leaves: e.leaves,
                nodes: e.nodes,
                probability_mass: e.probability_mass.into(),
                wall_time: wall.into(),
            });
        }
    }
    write_rows(&out.join(EXACT_CSV), &rows)?;
    Ok(rows)
}

/// Calibration of every method at every tolerance, without the runs.
pub fn calibration_table(spec: &ExperimentSpec, out: &Path) -> Result<Vec<CalibrationRow>> {
    ensure_dir(out)?;
    let mut rows = Vec::new();
    for &tag in &spec.methods {
        let setup = tag.setup();
        for (t_ix, &t_end) in spec.t_values().iter().enumerate() {
            let model = spec.model(t_end)?;
            for (eps_ix, &eps) in spec.eps.iter().enumerate() {
                let c = calibrate(spec, &setup, &model, eps, calibration_seed(spec, t_ix, eps_ix))
                    .with_context(|| format!("calibrating {tag} at eps {eps:e}, T = {t_end}"))?;
                rows.push(CalibrationRow {
                    method: tag,
                    t_end: t_end.into(),
                    eps: eps.into(),
                    c1: c.calibration.c1.into(),
                    order: c.calibration.order.into(),
                    levels: c.config.levels,
                    m0: c.config.m0,
                    run_eps: c.config.eps.into(),
                });
            }
        }
    }
    write_rows(&out.join(CALIBRATION_CSV), &rows)?;
    Ok(rows)
}

/// Reference value from an extrapolated Störmer–Verlet run at tolerance `eps`,
/// for problems without a closed form.
pub fn simulated_reference(spec: &ExperimentSpec, t_end: f64, eps: f64, seed: u64) -> Result<f64> {
    let model = spec.model(t_end)?;
    let setup = MethodSetup {
        scheme: Scheme::StormerVerletOU,
        rule: LevelRule::Levels,
        ..MethodTag::Svge.setup()
    };
    let cal = calibrate(spec, &setup, &model, eps, mix_seed(seed, 2))?;
    Ok(run(&cal.config, &model, &spec.qoi(), seed)?.estimate)
}
