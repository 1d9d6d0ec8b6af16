//! Command-line entry point.

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use rotbec_cli::config::{preset_configs, RunConfig};
use rotbec_cli::pipeline;
use std::path::PathBuf;
use std::process::ExitCode;

/// Finite-temperature simulations of rotating Bose gases: a stochastic
/// projected Gross-Pitaevskii band coupled to a semiclassical reservoir.
///
/// Set ROTBEC_WORKERS to bound the trajectory worker pool (default: all
/// available cores).
#[derive(Parser)]
#[command(name = "rotbec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Run-configuration file (see the config module documentation).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in preset: headline, smoke-low, smoke-high, or sweep (quench
    /// only).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Override the ensemble root seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

impl Source {
    fn configs(&self) -> Result<Vec<(String, RunConfig)>> {
        let mut list = match (&self.config, &self.preset) {
            (Some(path), None) => {
                let label = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("run")
                    .to_string();
                vec![(label, RunConfig::from_file(path)?)]
            }
            (None, Some(name)) => preset_configs(name)?,
            (None, None) => bail!("provide either --config PATH or --preset NAME"),
            (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
        };
        if let Some(seed) = self.seed {
            for (_, cfg) in &mut list {
                cfg.ensemble.seed = seed;
            }
        }
        Ok(list)
    }

    fn single(&self) -> Result<RunConfig> {
        let mut list = self.configs()?;
        if list.len() != 1 {
            bail!(
                "this subcommand takes a single configuration, but the preset expands to {} runs",
                list.len()
            );
        }
        Ok(list.pop().unwrap().1)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Transition-temperature and cloud angular-momentum tables over a
    /// rotation-rate grid.
    Thermo {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Reservoir growth-rate summary and radial profile for the quench
    /// reservoir.
    Rates {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Draw initial-ensemble states and write them as checkpoints together
    /// with an occupation table.
    Sample {
        #[command(flatten)]
        source: Source,
        /// Number of samples to draw (default: the configured ensemble
        /// size).
        #[arg(long, value_name = "N")]
        traj: Option<usize>,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Evolve one trajectory and write its archive.
    Evolve {
        #[command(flatten)]
        source: Source,
        /// Input checkpoint; a fresh initial-ensemble draw is used when
        /// absent.
        #[arg(value_name = "CHECKPOINT")]
        checkpoint: Option<PathBuf>,
        /// Trajectory index in the seed lineage.
        #[arg(long, value_name = "N", default_value_t = 0)]
        traj: u64,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Re-analyze a trajectory archive directory.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Archive directory written by `evolve` or `quench`.
        #[arg(value_name = "ARCHIVE_DIR")]
        archive: PathBuf,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Full pipeline: sample, evolve, and analyze an ensemble of
    /// trajectories, then aggregate.
    Quench {
        #[command(flatten)]
        source: Source,
        /// Override the number of trajectories.
        #[arg(long, value_name = "N")]
        traj: Option<usize>,
        /// Output root; each run gets a labeled subdirectory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Fast invariant gates; exits nonzero when any gate fails.
    Verify {
        #[command(flatten)]
        source: Source,
    },
}

fn default_out(sub: &str) -> PathBuf {
    PathBuf::from("rotbec_out").join(sub)
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Thermo { source, out } => {
            let cfg = source.single()?;
            pipeline::cmd_thermo(&cfg, &out.unwrap_or_else(|| default_out("thermo")))?;
        }
        Command::Rates { source, out } => {
            let cfg = source.single()?;
            pipeline::cmd_rates(&cfg, &out.unwrap_or_else(|| default_out("rates")))?;
        }
        Command::Sample { source, traj, out } => {
            let cfg = source.single()?;
            let count = traj.unwrap_or(cfg.ensemble.n_traj);
            pipeline::cmd_sample(&cfg, count, &out.unwrap_or_else(|| default_out("sample")))?;
        }
        Command::Evolve {
            source,
            checkpoint,
            traj,
            out,
        } => {
            let cfg = source.single()?;
            pipeline::cmd_evolve(
                &cfg,
                checkpoint.as_deref(),
                traj,
                &out.unwrap_or_else(|| default_out("evolve")),
            )?;
        }
        Command::Analyze {
            source,
            archive,
            out,
        } => {
            let cfg = source.single()?;
            pipeline::cmd_analyze(&cfg, &archive, &out.unwrap_or_else(|| default_out("analyze")))?;
        }
        Command::Quench { source, traj, out } => {
            let mut list = source.configs()?;
            if let Some(n) = traj {
                for (_, cfg) in &mut list {
                    cfg.ensemble.n_traj = n;
                }
            }
            let root = out.unwrap_or_else(|| default_out("quench"));
            for (label, cfg) in &list {
                pipeline::cmd_quench(cfg, label, &root)?;
            }
        }
        Command::Verify { source } => {
            let cfg = source.single()?;
            if !pipeline::cmd_verify(&cfg)? {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
