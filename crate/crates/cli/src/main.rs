use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ctxbo_cli::commands::{cmd_aggregate, cmd_regret, cmd_run, cmd_tv};
use ctxbo_cli::{BenchmarkConfig, CliError};

#[derive(Parser)]
#[command(name = "bench", version, about = "Contextual Bayesian-optimization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (problem, algorithm, seed) cell of a benchmark config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Recompute cells that already have a complete trace.
        #[arg(long)]
        force: bool,
        /// Concurrent runs (defaults to the config's parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Per-seed regret (or reward) CSVs from the traces in a results directory.
    Regret {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Mean and standard error across seeds.
    Aggregate {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Total-variation error of the density estimate against the true context law.
    Tv {
        #[arg(long)]
        problem: String,
        #[arg(long, value_delimiter = ',', default_value = "10,100,200,300")]
        samples: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long)]
        grid: Option<usize>,
    },
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, force, jobs } => {
            let cfg = BenchmarkConfig::load(&config)?;
            let s = cmd_run(&cfg, force, jobs)?;
            eprintln!(
                "{} cell(s) run, {} skipped, {} failed; results in {}",
                s.executed,
                s.skipped,
                s.failed,
                cfg.output_dir.display()
            );
            Ok(if s.failed > 0 { 3 } else { 0 })
        }
        Command::Regret { dir } => {
            let n = cmd_regret(&dir)?;
            eprintln!("wrote {n} curve(s)");
            Ok(0)
        }
        Command::Aggregate { dir } => {
            let n = cmd_aggregate(&dir)?;
            eprintln!("wrote {n} aggregate file(s)");
            Ok(0)
        }
        Command::Tv {
            problem,
            samples,
            seeds,
            grid,
        } => {
            print!("{}", cmd_tv(&problem, &samples, seeds, grid)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let code = match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
