use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use langevin_mlmc_cli::suite::{self, simulated_reference};
use langevin_mlmc_cli::ExperimentSpec;

#[derive(Parser)]
#[command(name = "langevin-mlmc", version, about = "Multilevel Monte Carlo experiments for Langevin dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the tolerance list, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Leaf budget for tree enumeration.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full suite of an experiment file.
    Run {
        #[command(flatten)]
        common: Common,
        /// Replace published reference values by an extrapolated
        /// Störmer–Verlet run at this tolerance.
        #[arg(long)]
        recompute_reference: Option<f64>,
    },
    /// Sweep the inter-level bias of the discrete methods.
    Bias {
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate the coarsest level of the discrete methods.
    Exact {
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate every method without running it.
    Calibrate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentSpec> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut spec = ExperimentSpec::load(&common.config)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(eps) = &common.eps {
        spec.eps = eps.clone();
    }
    if let Some(b) = common.budget {
        spec.leaf_budget = Some(b);
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            common,
            recompute_reference,
        } => {
            let mut spec = load(&common)?;
            if let Some(eps) = recompute_reference {
                let mut values = Vec::new();
                for t in spec.t_values() {
                    let v = simulated_reference(&spec, t, eps, spec.seed)?;
                    eprintln!("reference at T = {t}: {v:.12}");
                    values.push(v);
                }
                spec = spec.with_references(&values)?;
            }
            let res = suite::run_suite(&spec, &common.out)?;
            for r in &res.runs {
                eprintln!(
                    "{:>6} T={} eps={:.2e} L={} estimate={:.10} cost={:.3e} time={:.3}s",
                    r.method, r.t_end.0, r.eps.0, r.levels, r.estimate.0, r.total_cost.0, r.wall_time.0
                );
            }
        }
        Command::Bias { common } => {
            let spec = load(&common)?;
            let rows = suite::bias_sweep(&spec, &common.out)?;
            for r in &rows {
                eprintln!("{:>5} h={:.4e} bias={:.3e} ({})", r.method, r.h.0, r.signed_bias.0, r.bias_method);
            }
        }
        Command::Exact { common } => {
            let spec = load(&common)?;
            for r in suite::exact_table(&spec, &common.out)? {
                eprintln!("{:>5} M0={} value={:.15} leaves={}", r.method, r.m0, r.value.0, r.leaves);
            }
        }
        Command::Calibrate { common } => {
            let spec = load(&common)?;
            for r in suite::calibration_table(&spec, &common.out)? {
                eprintln!(
                    "{:>6} eps={:.2e} c1={:.4e} L={} M0={} run eps={:.3e}",
                    r.method, r.eps.0, r.c1.0, r.levels, r.m0, r.run_eps.0
                );
            }
        }
    }
    Ok(())
}
