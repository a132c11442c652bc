//! Command-line front end for boga campaigns: single runs, `k_propose`
//! sweeps and post-hoc reports.

pub mod commands;
pub mod diagnostics;
pub mod report;
pub mod svg;
pub mod sweep;

pub use commands::{
    cmd_report, cmd_run, cmd_sweep, init_logging, RunOverrides, EXIT_CONFIG, EXIT_EVALUATOR, EXIT_FAILURE, EXIT_OK,
};
pub use report::{emit_report, running_top_quartile, ReportError, ReportOptions};
pub use sweep::{run_sweep, SweepError, SweepSpec};
