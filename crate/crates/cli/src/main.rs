//! `faultline`: run failure searches from config files, replay their logs,
//! and compare results.

mod compare;
mod config;
mod error;
mod plot;
mod replay;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(
    name = "faultline",
    version,
    about = "Most-likely failure search harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver described by a config file.
    Run {
        config: PathBuf,
        /// Output root; results go to <root>/<run_id>/.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        run_id: Option<String>,
    },
    /// Re-execute a trajectory log and check it against the recorded values.
    Replay {
        log: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Replay even if the config differs from the one that wrote the log.
        #[arg(long)]
        allow_hash_mismatch: bool,
        /// Also write the verdict as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rank two or more run summaries by best reward.
    Compare {
        summaries: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Export the best-reward curve of a report as TSV.
    ExportPlot {
        report: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run {
            config,
            output_dir,
            run_id,
        } => run::cmd_run(&config, output_dir, run_id).map(|_| 0),
        Command::Replay {
            log,
            config,
            allow_hash_mismatch,
            report,
        } => replay::cmd_replay(&log, &config, allow_hash_mismatch, report),
        Command::Compare { summaries, output } => {
            compare::cmd_compare(&summaries, output).map(|_| 0)
        }
        Command::ExportPlot { report, output } => plot::cmd_export_plot(&report, output).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
