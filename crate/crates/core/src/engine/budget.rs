use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Wall-clock seconds spent per component.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentTimes {
    pub objective: f64,
    pub surrogate_fit: f64,
    pub surrogate_predict: f64,
    pub embedding: f64,
    pub proposal: f64,
    pub selection: f64,
}

impl ComponentTimes {
    pub fn total(&self) -> f64 {
        self.objective + self.surrogate_fit + self.surrogate_predict + self.embedding + self.proposal + self.selection
    }

    /// Fraction of tracked time spent in objective evaluation.
    pub fn objective_share(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            self.objective / total
        } else {
            0.0
        }
    }

    pub fn add(&mut self, other: &ComponentTimes) {
        self.objective += other.objective;
        self.surrogate_fit += other.surrogate_fit;
        self.surrogate_predict += other.surrogate_predict;
        self.embedding += other.embedding;
        self.proposal += other.proposal;
        self.selection += other.selection;
    }
}

/// Exact cost accounting for a campaign.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BudgetCounters {
    /// Successful objective evaluations.
    pub objective_evals: u64,
    pub objective_failures: u64,
    pub surrogate_fits: u64,
    pub surrogate_predictions: u64,
    pub embeddings_computed: u64,
    /// Selected candidates skipped because they were already evaluated.
    pub dedup_shortfall: u64,
    pub wall_clock: ComponentTimes,
}

pub(crate) fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}
