//! Surrogate-guided genetic algorithm for peptide sequence design.
//!
//! A generation selects elite parents, mutates them into a large proposal
//! pool, scores the pool with a probabilistic surrogate and an acquisition
//! function, and sends only the best few candidates to the expensive
//! objective. With pool size equal to the evaluation count the loop is a
//! plain genetic algorithm.

pub mod acquisition;
pub mod embed;
pub mod engine;
pub mod objectives;
pub mod seqcore;
pub mod surrogate;

pub use acquisition::{expected_improvement, select_for_evaluation, upper_confidence_bound, AcquisitionSpec};
pub use embed::{Embedder, EmbeddingConfig, EmbeddingVector};
pub use engine::{
    budget_report, reference_ga, run_campaign, BudgetCounters, CampaignConfig, CampaignLog, EngineError, SchedulePhase,
};
pub use objectives::{EvalError, Landscape, Objective, ObjectiveSpec};
pub use seqcore::{Direction, EvaluationDataset, MutationParams, SelectionStrategy, Sequence};
pub use surrogate::{fit_surrogate, PosteriorPrediction, SurrogateConfig, SurrogateModel};
