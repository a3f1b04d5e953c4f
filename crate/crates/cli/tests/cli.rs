use std::path::Path;
use std::process::Command;

use langevin_mlmc_cli::output::{read_rows, BiasRow, CalibrationRow, ExactRow, LevelRow, RunRow};
use langevin_mlmc_cli::suite::{LEVELS_CSV, MC_CSV, RUNS_CSV};
use langevin_mlmc_cli::{execute, mc_baseline, run_suite, ExperimentSpec, MethodTag};

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::parse(text).unwrap()
}

fn without_timing(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&i| !RunRow::TIMING.contains(&&header[i]))
        .collect();
    let mut rows = vec![keep.iter().map(|&i| header[i].to_string()).collect()];
    for rec in r.records() {
        let rec = rec.unwrap();
        rows.push(keep.iter().map(|&i| rec[i].to_string()).collect());
    }
    rows
}

fn ratio(a: &RunRow, b: &RunRow) -> f64 {
    a.total_cost.0 / b.total_cost.0
}

#[test]
fn every_config_in_the_repository_parses() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            n += 1;
        }
    }
    assert!(n >= 8, "{n} configs");
}

#[test]
fn suite_rows_read_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(
        r#"
        problem = "harmonic_small_noise"
        methods = ["SEG", "SE3"]
        eps = [8e-3]
        seed = 3
        "#,
    );
    let res = run_suite(&s, dir.path()).unwrap();
    assert_eq!(res.runs.len(), 2);
    assert_eq!(read_rows::<RunRow>(&dir.path().join(RUNS_CSV)).unwrap(), res.runs);
    assert_eq!(read_rows::<LevelRow>(&dir.path().join(LEVELS_CSV)).unwrap(), res.levels);
    let se3 = res.runs.iter().find(|r| r.method == MethodTag::Se3).unwrap();
    assert!(se3.inter_level_bias.is_some());
    // Only the enumerated level at this tolerance, so no coupled level to diagnose.
    assert_eq!(se3.levels, 0);
    assert!(res.bias.is_empty() && !dir.path().join("bias.csv").exists());
    assert!(res.levels.iter().any(|l| l.method == MethodTag::Se3 && l.exact && l.vhat.is_none()));
    let seg = res.runs.iter().find(|r| r.method == MethodTag::Seg).unwrap();
    assert!(seg.inter_level_bias.is_none());
    assert!(!dir.path().join(MC_CSV).exists());
}

#[test]
fn repeated_suites_agree_outside_the_timing_columns() {
    let text = r#"
        problem = "harmonic_set2"
        methods = ["EMG", "SVGe"]
        eps = [4e-3]
        repeat = 2
        seed = 9
        "#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_suite(&spec(text), a.path()).unwrap();
    run_suite(&spec(text), b.path()).unwrap();
    assert_eq!(without_timing(&a.path().join(RUNS_CSV)), without_timing(&b.path().join(RUNS_CSV)));
    assert_eq!(
        std::fs::read(a.path().join(LEVELS_CSV)).unwrap(),
        std::fs::read(b.path().join(LEVELS_CSV)).unwrap()
    );
    // The two replications within one suite use different streams.
    assert_ne!(ra.runs[0].estimate, ra.runs[1].estimate);
}

#[test]
fn error_plus_one_sd_within_tolerance() {
    let s = spec(
        r#"
        problem = "harmonic_set1"
        methods = ["SEG"]
        eps = [1e-3]
        seed = 1
        "#,
    );
    let res = execute(&s).unwrap();
    let r = &res.runs[0];
    let ratio = r.error_plus_sd_over_eps.unwrap().0;
    assert!(ratio <= 1.0, "(|error| + sd) / eps = {ratio}");
}

#[test]
fn plain_monte_carlo_falls_behind_as_eps_shrinks() {
    let s = spec(
        r#"
        problem = "harmonic_set2"
        methods = ["MC-EMG", "SEG"]
        eps = [1e-2, 2.5e-3]
        seed = 4
        "#,
    );
    let dir = tempfile::tempdir().unwrap();
    let res = run_suite(&s, dir.path()).unwrap();
    let mc: Vec<&RunRow> = res.runs.iter().filter(|r| r.method == MethodTag::McEmg).collect();
    let ml: Vec<&RunRow> = res.runs.iter().filter(|r| r.method == MethodTag::Seg).collect();
    let (coarse, fine) = (ratio(mc[0], ml[0]), ratio(mc[1], ml[1]));
    assert!(fine > coarse, "cost ratios {coarse} at eps 1e-2, {fine} at eps 2.5e-3");
    let baseline = read_rows::<RunRow>(&dir.path().join(MC_CSV)).unwrap();
    assert_eq!(baseline.len(), 2);
    assert_eq!(baseline.iter().collect::<Vec<_>>(), mc);
    let again = mc_baseline(&s, dir.path()).unwrap();
    assert_eq!(again.iter().map(|r| r.estimate).collect::<Vec<_>>(), mc.iter().map(|r| r.estimate).collect::<Vec<_>>());
}

#[test]
fn single_level_regime_costs_about_the_same() {
    // A weak force keeps the coarsest grid accurate enough.
    let s = spec(
        r#"
        problem = "custom"
        methods = ["MC-EMG", "EMG"]
        eps = [0.02]
        seed = 5

        [custom]
        potential = "harmonic"
        omega0 = 0.5
        lambda = 0.1
        sigma = 1.0
        q0 = [1.0]
        p0 = [0.0]
        qoi = "bump"
        "#,
    );
    let res = execute(&s).unwrap();
    let (mc, ml) = (&res.runs[0], &res.runs[1]);
    assert_eq!((mc.levels, ml.levels), (0, 0));
    let r = ratio(mc, ml);
    assert!((1.0 / 3.0..=3.0).contains(&r), "cost ratio {r}");
}

#[test]
fn baseline_needs_the_plain_method() {
    let s = spec("problem = \"harmonic_set1\"\nmethods = [\"SEG\"]\neps = [1e-2]\n");
    let dir = tempfile::tempdir().unwrap();
    assert!(mc_baseline(&s, dir.path()).is_err());
}

#[test]
fn errors_mostly_within_tolerance_over_a_grid() {
    let s = spec(
        r#"
        problem = "harmonic_set1"
        methods = ["EMG", "SEG", "SVG", "SEGe"]
        eps = [1.5625e-2, 7.8125e-3, 3.90625e-3]
        repeat = 3
        seed = 8
        "#,
    );
    let res = execute(&s).unwrap();
    let within = res.runs.iter().filter(|r| r.error_over_eps.unwrap().0 <= 1.0).count();
    let frac = within as f64 / res.runs.len() as f64;
    assert!(frac >= 0.9, "{within}/{} rows with |error| <= eps", res.runs.len());
}

#[test]
fn end_time_sweep_scaled_cost_stays_within_an_order_of_magnitude() {
    let s = ExperimentSpec {
        eps: vec![9.765625e-3],
        methods: vec![MethodTag::Seg],
        ..ExperimentSpec::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig5_double_well_t_sweep.toml"))
            .unwrap()
    };
    let res = execute(&s).unwrap();
    assert_eq!(res.runs.len(), 4);
    let scaled: Vec<f64> = res.runs.iter().map(|r| r.walltime_times_eps2_over_t.0).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    assert!(hi / lo < 10.0, "walltime * eps^2 / T = {scaled:?}");
    for r in &res.runs {
        assert!(r.reference.is_some(), "no reference at T = {}", r.t_end.0);
    }
}

mod binary {
    use super::*;

    fn write(dir: &Path, text: &str) -> std::path::PathBuf {
        let p = dir.join("exp.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn cli(args: &[&str]) -> std::process::Output {
        Command::new(env!("CARGO_BIN_EXE_langevin-mlmc")).args(args).output().unwrap()
    }

    fn ok(args: &[&str]) {
        let o = cli(args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }

    #[test]
    fn subcommands_write_their_tables() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "problem = \"harmonic_small_noise\"\nmethods = [\"SE4\"]\neps = [1e-2]\nseed = 2\n\n[bias]\nlevels = 3\n",
        );
        let out = dir.path().join("out");
        let (cfg, out) = (cfg.to_str().unwrap(), out.to_str().unwrap());
        let common = ["--config", cfg, "--out", out, "--threads", "1"];

        ok(&[&["run"][..], &common, &["--eps", "1e-2,5e-3"]].concat());
        let runs = read_rows::<RunRow>(&Path::new(out).join(RUNS_CSV)).unwrap();
        assert_eq!(runs.iter().map(|r| r.eps.0).collect::<Vec<_>>(), vec![1e-2, 5e-3]);

        ok(&[&["bias"][..], &common[..4]].concat());
        let bias = read_rows::<BiasRow>(&Path::new(out).join("bias.csv")).unwrap();
        assert_eq!(bias.len(), 3);
        assert!(bias[2].inter_level_bias.0 < bias[0].inter_level_bias.0);

        ok(&[&["exact"][..], &common[..4], &["--budget", "100000"]].concat());
        let exact = read_rows::<ExactRow>(&Path::new(out).join("exact.csv")).unwrap();
        assert_eq!((exact[0].m0, exact[0].leaves), (8, 4u128.pow(8)));
        assert!((exact[0].probability_mass.0 - 1.0).abs() < 1e-12);

        let o = cli(&["exact", "--config", cfg, "--out", out, "--budget", "1000"]);
        assert!(!o.status.success());

        ok(&["calibrate", "--config", cfg, "--out", out, "--seed", "5"]);
        let cal = read_rows::<CalibrationRow>(&Path::new(out).join("calibration.csv")).unwrap();
        assert_eq!(cal.len(), 1);
        assert!(cal[0].run_eps.0 <= 1e-2);
    }

    #[test]
    fn unknown_tag_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "problem = \"harmonic_set1\"\nmethods = [\"SE5\"]\neps = [1e-2]\n");
        let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("SE5"), "{err}");
    }

    #[test]
    fn unwritable_output_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(dir.path(), "problem = \"harmonic_set1\"\nmethods = [\"SEG\"]\neps = [5e-2]\n");
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "").unwrap();
        let out = blocker.join("out");
        let o = cli(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(!o.status.success());
    }
}
