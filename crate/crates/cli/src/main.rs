use std::path::PathBuf;
use std::process::ExitCode;

use boga_cli::report::{DEFAULT_BANDS, DEFAULT_WINDOW};
use boga_cli::{cmd_report, cmd_run, cmd_sweep, init_logging, ReportOptions, RunOverrides};
use clap::{Parser, Subcommand};

/// Surrogate-guided genetic algorithm for peptide design.
#[derive(Debug, Parser)]
#[command(name = "boga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one campaign.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Log directory; overrides output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue an interrupted campaign in the log directory.
        #[arg(long)]
        resume: bool,
    },
    /// Run every k_propose x seed cell of a sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write trajectory, R² and distribution tables and plots.
    Report {
        /// Campaign log directories; repeat to overlay runs.
        #[arg(long = "log", required = true, num_args = 1..)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Trailing window of the running top-quartile mean, in evaluations.
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Generation band edges.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BANDS)]
        bands: Vec<usize>,
    },
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let code = match cli.command {
        Command::Run { config, seed, out: dir, resume } => {
            cmd_run(&config, &RunOverrides { seed, out: dir, resume }, &mut out, &mut err)
        }
        Command::Sweep { config } => cmd_sweep(&config, &mut out, &mut err),
        Command::Report { logs, out: dir, window, bands } => {
            cmd_report(&logs, &dir, &ReportOptions { window, bands }, &mut out, &mut err)
        }
    };
    ExitCode::from(code as u8)
}
