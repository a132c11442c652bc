//! Objective functions: built-in landscapes, a latency-injecting mock and
//! external evaluator processes.

mod builtin;
mod external;
pub mod protocol;

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{
    beta_sheet_fraction, hydrophobic_moment, ideal_moment, mean_moment_with_offset, molecular_weight,
    parse_residue_table, u_h_rel, HydrophobicMoment, HydrophobicityScale, Landscape, ScaleError, HELIX_ANGLE_DEG,
    WATER_MASS,
};
pub use external::{evaluate_external, ExternalEvaluator};

use crate::seqcore::{Direction, Sequence};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("evaluator timed out on {0}")]
    Timeout(Sequence),
    #[error("evaluator protocol error{}: {message}", .sequence.as_ref().map(|s| format!(" for {s}")).unwrap_or_default())]
    Protocol { sequence: Option<Sequence>, message: String },
    #[error("non-finite score for {0}")]
    NonFiniteScore(Sequence),
    #[error("evaluator lost: {0}")]
    Lost(String),
    #[error("failed to launch evaluator: {0}")]
    Launch(String),
    #[error("evaluator handshake failed: {0}")]
    Handshake(String),
}

impl EvalError {
    /// Errors after which the evaluator cannot be used again.
    pub fn is_fatal(&self) -> bool {
        matches!(self, EvalError::Lost(_) | EvalError::Launch(_) | EvalError::Handshake(_))
    }

    /// Short machine-readable tag for logs.
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::Timeout(_) => "timeout",
            EvalError::Protocol { .. } => "protocol",
            EvalError::NonFiniteScore(_) => "non_finite",
            EvalError::Lost(_) => "lost",
            EvalError::Launch(_) => "launch",
            EvalError::Handshake(_) => "handshake",
        }
    }
}

/// Something that scores batches of sequences, preserving input order.
pub trait Objective: Send + Sync {
    fn evaluate_batch(&self, batch: &[Sequence]) -> Vec<Result<f64, EvalError>>;
}

/// Returns the named built-in objective after sleeping `latency`.
pub fn mock_expensive(seq: &Sequence, landscape: Landscape, latency: Duration) -> f64 {
    if !latency.is_zero() {
        thread::sleep(latency);
    }
    landscape.evaluate(seq)
}

/// In-process objective, optionally with artificial latency, fanned out over
/// `n_jobs` threads. Results are ordered by input index.
#[derive(Debug, Clone)]
pub struct LocalObjective {
    pub landscape: Landscape,
    pub latency: Duration,
    pub n_jobs: usize,
}

impl LocalObjective {
    pub fn new(landscape: Landscape) -> Self {
        Self { landscape, latency: Duration::ZERO, n_jobs: 1 }
    }

    fn score(&self, seq: &Sequence) -> Result<f64, EvalError> {
        let y = mock_expensive(seq, self.landscape, self.latency);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(EvalError::NonFiniteScore(seq.clone()))
        }
    }
}

impl Objective for LocalObjective {
    fn evaluate_batch(&self, batch: &[Sequence]) -> Vec<Result<f64, EvalError>> {
        let workers = self.n_jobs.max(1).min(batch.len().max(1));
        if workers == 1 {
            return batch.iter().map(|s| self.score(s)).collect();
        }
        let mut results: Vec<Option<Result<f64, EvalError>>> = vec![None; batch.len()];
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        (w..batch.len()).step_by(workers).map(|i| (i, self.score(&batch[i]))).collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("objective worker panicked") {
                    results[i] = Some(r);
                }
            }
        });
        results.into_iter().map(|r| r.expect("every index scored")).collect()
    }
}

impl Objective for ExternalEvaluator {
    fn evaluate_batch(&self, batch: &[Sequence]) -> Vec<Result<f64, EvalError>> {
        self.evaluate(batch, self.timeout())
    }
}

fn default_timeout_ms() -> u64 {
    60_000
}

fn default_handshake_ms() -> u64 {
    30_000
}

fn default_n_jobs() -> usize {
    1
}

/// How objective values are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorSpec {
    Builtin {
        landscape: Landscape,
    },
    Mock {
        landscape: Landscape,
        #[serde(default)]
        latency_ms: u64,
    },
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_handshake_ms")]
        handshake_timeout_ms: u64,
    },
}

/// Objective declaration as it appears in a campaign configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub name: String,
    #[serde(default)]
    pub direction: Direction,
    /// Maximum concurrent evaluations.
    #[serde(default = "default_n_jobs")]
    pub n_jobs: usize,
    pub evaluator: EvaluatorSpec,
}

impl ObjectiveSpec {
    pub fn builtin(landscape: Landscape, direction: Direction) -> Self {
        Self {
            name: landscape.name().to_string(),
            direction,
            n_jobs: 1,
            evaluator: EvaluatorSpec::Builtin { landscape },
        }
    }

    /// Instantiates the objective; external evaluators are launched here.
    pub fn build(&self) -> Result<Box<dyn Objective>, EvalError> {
        Ok(match &self.evaluator {
            EvaluatorSpec::Builtin { landscape } => {
                Box::new(LocalObjective { landscape: *landscape, latency: Duration::ZERO, n_jobs: self.n_jobs })
            }
            EvaluatorSpec::Mock { landscape, latency_ms } => Box::new(LocalObjective {
                landscape: *landscape,
                latency: Duration::from_millis(*latency_ms),
                n_jobs: self.n_jobs,
            }),
            EvaluatorSpec::External { command, timeout_ms, handshake_timeout_ms } => {
                Box::new(ExternalEvaluator::launch(
                    command,
                    Duration::from_millis(*timeout_ms),
                    self.n_jobs,
                    Duration::from_millis(*handshake_timeout_ms),
                )?)
            }
        })
    }
}
