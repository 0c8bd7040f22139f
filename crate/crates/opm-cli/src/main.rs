//! Command-line entry point: simulate, train, reduce, ensemble, bifurcation
//! and verify pipelines over the two case studies.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "opm", version, about = "Non-Markovian reduced models for stochastically forced PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (TOML, or a manifest.json from a previous run).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Tau search grid override, "start:step:end".
    #[arg(long)]
    tau_grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the full model on one seeded noise path.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/simulate")]
        out: PathBuf,
    },
    /// Train the parameterization on a single path (defect sweep over tau).
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/train")]
        out: PathBuf,
    },
    /// Integrate the reduced model from a trained spec on one noise path.
    Reduce {
        #[command(flatten)]
        common: CommonArgs,
        /// Trained parameterization artifact (spec.json).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out/reduce")]
        out: PathBuf,
    },
    /// Paired full/reduced ensembles with comparison statistics.
    Ensemble {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        spec: PathBuf,
        /// Ensemble size override.
        #[arg(long)]
        paths: Option<u64>,
        /// Jump parameterization variant: full | ou.
        #[arg(long)]
        approx: Option<String>,
        #[arg(long, default_value = "out/ensemble")]
        out: PathBuf,
    },
    /// Steady-state branches and the double-fold diagram.
    Bifurcation {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "out/bifurcation")]
        out: PathBuf,
    },
    /// Run the fast oracle suite.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if common.workers > 0 {
        cfg.workers_count = common.workers;
    }
    if let Some(grid) = &common.tau_grid {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            anyhow::bail!("--tau-grid expects start:step:end, got {grid:?}");
        }
        let vals: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("--tau-grid: {e}"))?;
        cfg.sace.tau_start_time = vals[0];
        cfg.sace.tau_step_time = vals[1];
        cfg.sace.tau_end_time = vals[2];
        cfg.jump.tau_start_time = vals[0];
        cfg.jump.tau_step_time = vals[1];
        cfg.jump.tau_end_time = vals[2];
    }
    cfg.validate()?;
    if cfg.workers_count > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers_count)
            .build_global()
            .ok();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&CommonArgs, Box<dyn FnOnce(&ExperimentConfig) -> anyhow::Result<()>>) =
        match &cli.command {
            Command::Simulate { common, out } => {
                let out = out.clone();
                let seed = common.seed;
                (
                    common,
                    Box::new(move |cfg| {
                        commands::cmd_simulate(cfg, &out, seed.unwrap_or(cfg.base_seed))
                    }),
                )
            }
            Command::Train { common, out } => {
                let out = out.clone();
                let seed = common.seed;
                (common, Box::new(move |cfg| commands::cmd_train(cfg, &out, seed)))
            }
            Command::Reduce { common, spec, out } => {
                let (spec, out) = (spec.clone(), out.clone());
                let seed = common.seed;
                (
                    common,
                    Box::new(move |cfg| {
                        commands::cmd_reduce(cfg, &spec, &out, seed.unwrap_or(cfg.base_seed))
                    }),
                )
            }
            Command::Ensemble {
                common,
                spec,
                paths,
                approx,
                out,
            } => {
                let (spec, out) = (spec.clone(), out.clone());
                let (paths, approx) = (*paths, approx.clone());
                let seed = common.seed;
                (
                    common,
                    Box::new(move |cfg| {
                        commands::cmd_ensemble(
                            cfg,
                            &spec,
                            &out,
                            paths,
                            seed.unwrap_or(cfg.base_seed),
                            approx.as_deref(),
                        )
                    }),
                )
            }
            Command::Bifurcation { common, out } => {
                let out = out.clone();
                (common, Box::new(move |cfg| commands::cmd_bifurcation(cfg, &out)))
            }
            Command::Verify { common } => (common, Box::new(|cfg| commands::cmd_verify(cfg))),
        };

    let cfg = match load_config(common) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("configuration error: {err:#}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
