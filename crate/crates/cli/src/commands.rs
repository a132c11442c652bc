//! Subcommand bodies. Each returns a process exit status and writes human
//! output to the given streams, so they can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use boga_core::engine::{resume_campaign, run_campaign, ConfigError, CHECKPOINT_FILE};
use boga_core::{BudgetCounters, CampaignConfig, CampaignLog, EngineError};

use crate::diagnostics::diagnose;
use crate::report::{emit_report, ReportOptions};
use crate::sweep::{run_sweep, CellStatus, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EVALUATOR: i32 = 3;

pub const LOG_LEVEL_VAR: &str = "BOGA_LOG_LEVEL";

/// Installs the stderr logger at the level named by `BOGA_LOG_LEVEL`
/// (`error`, `warn`, `info` or `debug`; default `warn`).
pub fn init_logging() {
    let requested = std::env::var(LOG_LEVEL_VAR).ok();
    let level = match requested.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("") => log::LevelFilter::Warn,
        Some("error") => log::LevelFilter::Error,
        Some("warn") => log::LevelFilter::Warn,
        Some("info") => log::LevelFilter::Info,
        Some("debug") => log::LevelFilter::Debug,
        Some(other) => {
            eprintln!("warning: {LOG_LEVEL_VAR}={other:?} is not one of error, warn, info, debug; using warn");
            log::LevelFilter::Warn
        }
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Continue from the checkpoint in the output directory, if there is one.
    pub resume: bool,
}

/// Log directory used when neither `--out` nor `output_dir` is given.
pub fn default_output_dir(config_path: &Path) -> PathBuf {
    let stem = config_path.file_stem().map_or("campaign".into(), |s| s.to_string_lossy());
    PathBuf::from("runs").join(stem.as_ref())
}

fn config_failure(err: &mut dyn Write, path: &Path, text: Option<&str>, e: &ConfigError) -> i32 {
    let _ = writeln!(err, "error: {}", diagnose(path, text, e));
    EXIT_CONFIG
}

fn engine_failure(err: &mut dyn Write, path: &Path, text: Option<&str>, e: &EngineError) -> i32 {
    if let EngineError::Config(c) = e {
        return config_failure(err, path, text, c);
    }
    let _ = writeln!(err, "error: {e}");
    if e.is_evaluator_failure() {
        EXIT_EVALUATOR
    } else {
        EXIT_FAILURE
    }
}

fn write_budget(out: &mut dyn Write, c: &BudgetCounters) {
    let t = &c.wall_clock;
    let _ = writeln!(out, "objective evaluations: {} ok, {} failed", c.objective_evals, c.objective_failures);
    let _ = writeln!(
        out,
        "surrogate: {} fits, {} predictions; {} embeddings; {} duplicate selections skipped",
        c.surrogate_fits, c.surrogate_predictions, c.embeddings_computed, c.dedup_shortfall
    );
    let _ = writeln!(
        out,
        "wall clock: {:.3} s total, objective {:.3} s ({:.1}%), surrogate fit {:.3} s, predict {:.3} s, embedding {:.3} s, proposal {:.3} s, selection {:.3} s",
        t.total(),
        t.objective,
        100.0 * t.objective_share(),
        t.surrogate_fit,
        t.surrogate_predict,
        t.embedding,
        t.proposal,
        t.selection
    );
}

fn write_summary(out: &mut dyn Write, log: &CampaignLog) {
    match log.best() {
        Some(b) => {
            let _ = writeln!(out, "best sequence: {}", b.sequence);
            let _ = writeln!(out, "best score: {}", b.score);
        }
        None => {
            let _ = writeln!(out, "best sequence: none");
        }
    }
    write_budget(out, &log.counters);
    if let Some(dir) = &log.output_dir {
        let _ = writeln!(out, "log: {}", dir.display());
    }
}

/// `boga run`: one campaign from a config file.
pub fn cmd_run(config_path: &Path, overrides: &RunOverrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(source) => {
            let e = ConfigError::Io { path: config_path.to_path_buf(), source };
            return config_failure(err, config_path, None, &e);
        }
    };
    let mut config = match CampaignConfig::from_toml_str(&text) {
        Ok(c) => c,
        Err(e) => return config_failure(err, config_path, Some(&text), &e),
    };
    if let Some(seed) = overrides.seed {
        config.master_seed = seed;
    }
    let dir =
        overrides.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| default_output_dir(config_path));
    config.output_dir = Some(dir.clone());

    let result = if overrides.resume && dir.join(CHECKPOINT_FILE).exists() {
        let _ = writeln!(out, "resuming from {}", dir.display());
        resume_campaign(&dir)
    } else {
        if overrides.resume {
            log::warn!("no checkpoint in {}; starting a new campaign", dir.display());
        }
        run_campaign(config)
    };
    match result {
        Ok(log) => {
            write_summary(out, &log);
            EXIT_OK
        }
        Err(e) => engine_failure(err, config_path, Some(&text), &e),
    }
}

/// `boga sweep`: every (k_propose, seed) cell of a sweep file.
pub fn cmd_sweep(sweep_path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let spec = match SweepSpec::load(sweep_path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", sweep_path.display());
            return EXIT_CONFIG;
        }
    };
    let outcome = match run_sweep(&spec) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    for c in &outcome.cells {
        match &c.status {
            CellStatus::Done { final_window_mean, .. } => {
                let mean = final_window_mean.map_or("n/a".to_string(), |m| format!("{m:.4}"));
                let _ = writeln!(out, "k_propose={:<6} seed={:<4} final-window mean {mean}", c.k_propose, c.seed);
            }
            CellStatus::Failed(msg) => {
                let _ = writeln!(out, "k_propose={:<6} seed={:<4} FAILED: {msg}", c.k_propose, c.seed);
            }
        }
    }
    let _ = writeln!(out, "comparison: {}", outcome.comparison_csv.display());
    let _ = writeln!(out, "summary: {}", outcome.summary_csv.display());
    if outcome.failed() > 0 {
        let _ = writeln!(err, "error: {} of {} cells failed", outcome.failed(), outcome.cells.len());
        EXIT_FAILURE
    } else {
        EXIT_OK
    }
}

/// `boga report`: tables and plots for one or more log directories.
pub fn cmd_report(
    logs: &[PathBuf],
    out_dir: &Path,
    options: &ReportOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    match emit_report(logs, out_dir, options) {
        Ok(files) => {
            for f in files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}
