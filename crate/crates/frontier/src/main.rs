//! `frontier run | oracle | compare`.
//!
//! Exit status: 0 success, 2 config error, 3 runtime failure (including a
//! failed seed), 4 refusal.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frontier::compare::{compare, write_comparison};
use frontier::config::{load_experiment, Overrides};
use frontier::oracle::run_oracle;
use frontier::run::{run_experiment, workers_from_env, RunStatus};
use frontier::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "frontier",
    version,
    about = "Multi-objective policy-gradient search on synthetic benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured seed and write per-run outputs plus a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the seeds listed in the config; repeatable.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate the space and write the exact front and its metrics.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate metrics across run directories.
    Compare {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where compare.csv and compare.json go.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, seeds, out } => {
            let workers = workers_from_env()?;
            let exp = load_experiment(
                &config,
                &Overrides {
                    seeds,
                    out,
                    seeds_optional: false,
                },
            )?;
            let (summary, path) = run_experiment(&exp, workers)?;
            for r in &summary.runs {
                match r.status {
                    RunStatus::Ok => println!(
                        "{} seed {}: area {} hypervolume {} front {}",
                        summary.algorithm.tag(),
                        r.seed,
                        r.dominated_area
                            .map_or_else(|| "-".into(), |a| format!("{a:.6}")),
                        r.hypervolume
                            .map_or_else(|| "-".into(), |h| format!("{h:.6}")),
                        r.front_size.unwrap_or(0),
                    ),
                    RunStatus::Failed => eprintln!(
                        "{} seed {}: FAILED {}",
                        summary.algorithm.tag(),
                        r.seed,
                        r.error.as_deref().unwrap_or("")
                    ),
                }
            }
            println!("summary: {}", path.display());
            if summary.failed > 0 {
                return Err(CliError::Runtime(format!(
                    "{} of {} seeds failed",
                    summary.failed,
                    summary.runs.len()
                )));
            }
            Ok(())
        }
        Command::Oracle { config, out } => {
            let exp = load_experiment(
                &config,
                &Overrides {
                    out,
                    seeds_optional: true,
                    ..Overrides::default()
                },
            )?;
            let (m, paths) = run_oracle(&exp)?;
            println!(
                "oracle: {} encodings, front {}, area {}, hypervolume {:.6}",
                m.cardinality,
                m.front_size,
                m.dominated_area
                    .map_or_else(|| "-".into(), |a| format!("{a:.6}")),
                m.hypervolume
            );
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Compare { dirs, out } => {
            let c = compare(&dirs)?;
            for row in &c.algorithms {
                let area = row
                    .dominated_area
                    .map_or_else(|| "-".into(), |a| format!("{:.6} ± {:.6}", a.mean, a.sd));
                println!(
                    "{:4} runs {:3} area {area} hypervolume {:.6} ± {:.6}",
                    row.algorithm.tag(),
                    row.runs.len(),
                    row.hypervolume.mean,
                    row.hypervolume.sd
                );
            }
            for p in write_comparison(&c, &out)? {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
