//! Argument parsing and dispatch.

use std::path::PathBuf;

use aepinn::metrics::error_table;
use aepinn::problems::ProblemId;
use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use crate::commands::{self, GRADCHECK_STEP, GRADCHECK_TOLERANCE};
use crate::config::{parse_problem, RunFile};
use crate::presets::{Method, Preset};
use crate::UsageError;

#[derive(Debug, Parser)]
#[command(
    name = "aepinn",
    version,
    about = "Train and compare solvers for elliptic interface problems"
)]
pub struct Cli {
    /// Seed of the sampling and initialization streams [default: 1234].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Architecture, point and budget preset [default: paper].
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model and write manifest, history, checkpoint and errors.
    Train {
        /// Configuration file; command-line flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Re-run exactly the configuration recorded in a run manifest.
        #[arg(long, conflicts_with = "config")]
        replay: Option<PathBuf>,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Test-grid nodes per axis.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Train several methods with their presets and tabulate their errors.
    Compare {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
        methods: Vec<Method>,
        /// Sweep of the scaling exponent; only for the flower problem.
        #[arg(long, value_delimiter = ',')]
        kappas: Vec<i32>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Write the tagged training points of a problem as CSV.
    DumpPoints {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the pointwise absolute error of a checkpoint on the test grid.
    ErrorField {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Compare analytic loss gradients with central differences on random small models.
    Gradcheck {
        /// Problem id; every problem when omitted.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
        methods: Vec<Method>,
        #[arg(long, default_value_t = GRADCHECK_STEP)]
        step: f64,
        #[arg(long, default_value_t = GRADCHECK_TOLERANCE)]
        tolerance: f64,
    },
}

fn base_file(cli: &Cli) -> RunFile {
    RunFile {
        seed: cli.seed,
        preset: cli.preset,
        ..RunFile::default()
    }
}

/// Runs a parsed invocation, printing a short summary to stdout.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train {
            config,
            replay,
            problem,
            method,
            iterations,
            grid,
        } => {
            let resolved = if let Some(path) = replay {
                commands::RunManifest::load(path)?.resolved()
            } else {
                let file = match config {
                    Some(p) => RunFile::load(p)?,
                    None => RunFile::default(),
                };
                let flags = RunFile {
                    problem: problem.clone(),
                    method: *method,
                    iterations: *iterations,
                    grid: *grid,
                    ..base_file(&cli)
                };
                file.overlay(&flags).resolve()?
            };
            let rep = commands::train_run(&resolved, &cli.out, "train")?;
            let l = rep.manifest.final_loss.unwrap_or_default();
            println!("run directory: {}", rep.dir.display());
            println!("final loss: {:.3e}", l.total);
            print!("{}", error_table(&[rep.row]));
        }
        Command::Compare {
            problem,
            methods,
            kappas,
            iterations,
            grid,
        } => {
            let id = parse_problem(problem.as_deref())?;
            let ids: Vec<ProblemId> = if kappas.is_empty() {
                vec![id]
            } else {
                if !matches!(id, ProblemId::Ex2 { .. }) {
                    bail!(UsageError("--kappas applies only to ex2".into()));
                }
                kappas
                    .iter()
                    .map(|&kappa| ProblemId::Ex2 { kappa }.to_string().parse())
                    .collect::<aepinn::Result<_>>()?
            };
            let overrides = RunFile {
                iterations: *iterations,
                grid: *grid,
                ..base_file(&cli)
            };
            let rows = commands::compare(&ids, methods, &overrides, &cli.out)?;
            print!(
                "{}\n{}",
                error_table(&rows),
                commands::improvement_table(&rows)
            );
        }
        Command::DumpPoints { problem, config } => {
            let file = match config {
                Some(p) => RunFile::load(p)?,
                None => RunFile::default(),
            };
            let flags = RunFile {
                problem: problem.clone(),
                ..base_file(&cli)
            };
            let resolved = file.overlay(&flags).resolve()?;
            let (path, splits) = commands::dump_points(&resolved, &cli.out)?;
            println!("{} points written to {}", splits.total, path.display());
        }
        Command::ErrorField {
            checkpoint,
            problem,
            grid,
        } => {
            let id = parse_problem(problem.as_deref())?;
            let (path, max) = commands::error_field(checkpoint, id, *grid, &cli.out)?;
            println!(
                "max abs error {max:.3e}; field written to {}",
                path.display()
            );
        }
        Command::Gradcheck {
            problem,
            methods,
            step,
            tolerance,
        } => {
            let ids = match problem {
                Some(p) => vec![parse_problem(Some(p))?],
                None => ProblemId::ALL.to_vec(),
            };
            let seed = cli
                .seed
                .unwrap_or(aepinn::training::TrainConfig::DEFAULT_SEED);
            let mut failed = 0;
            for id in ids {
                for &m in methods {
                    let r = commands::gradcheck(id, m, seed, *step)?;
                    let ok = r.discrepancy < *tolerance;
                    failed += usize::from(!ok);
                    println!(
                        "{} {id} {m}: {} params, max relative discrepancy {:.3e}",
                        if ok { "PASS" } else { "FAIL" },
                        r.num_params,
                        r.discrepancy
                    );
                }
            }
            if failed > 0 {
                bail!("{failed} gradient checks exceeded tolerance {tolerance:e}");
            }
        }
    }
    Ok(())
}
