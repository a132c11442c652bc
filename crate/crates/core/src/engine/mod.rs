//! The optimization loop: schedule phases, budget accounting, logging, resume.

mod budget;
mod campaign;
mod config;
mod log;
mod reference;
mod rng;

pub use budget::{BudgetCounters, ComponentTimes};
pub use campaign::{
    budget_report, initialize_campaign, initialize_with_objective, resume_campaign, resume_with_objective,
    run_campaign, run_campaign_with_objective, run_generation, CampaignLog, CampaignState, EngineError,
    MIN_SURROGATE_POINTS,
};
pub use config::{CampaignConfig, ConfigError, EliteSource, SchedulePhase};
pub use log::{
    read_evaluations, read_generation_lines, Checkpoint, EvaluatedCandidate, EvaluationRecord, FailedCandidate,
    GenerationLine, GenerationRecord, InitRecord, LogError, LogWriter, CHECKPOINT_FILE, CONFIG_FILE, EVALUATIONS_FILE,
    GENERATIONS_FILE, SURROGATE_FILE,
};
pub use reference::reference_ga;
pub use rng::{stream, stream_seed, Purpose};
