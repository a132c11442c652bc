use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{deserialize_acquisition, AcquisitionSpec};
use crate::embed::{EmbeddingConfig, EncoderKind};
use crate::objectives::ObjectiveSpec;
use crate::seqcore::{MutationParams, SelectionStrategy, Sequence};
use crate::surrogate::SurrogateConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

/// Where elite parents are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliteSource {
    /// Every successful evaluation so far.
    #[default]
    History,
    /// Only the previous generation's evaluations (history when that is empty).
    LastGeneration,
}

fn default_elite_k() -> usize {
    10
}

/// One stretch of generations sharing acquisition and selection settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulePhase {
    #[serde(default, deserialize_with = "deserialize_acquisition")]
    pub acquisition: AcquisitionSpec,
    pub generations: usize,
    pub m_select: usize,
    pub k_propose: usize,
    #[serde(default = "default_elite_k")]
    pub elite_k: usize,
    #[serde(default)]
    pub elite_strategy: SelectionStrategy,
    /// Sample `m_select` uniformly among this many best acquisition values
    /// instead of taking the strict top.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_among_top: Option<usize>,
}

impl SchedulePhase {
    pub fn new(acquisition: AcquisitionSpec, generations: usize, m_select: usize, k_propose: usize) -> Self {
        Self {
            acquisition,
            generations,
            m_select,
            k_propose,
            elite_k: default_elite_k(),
            elite_strategy: SelectionStrategy::TopK,
            uniform_among_top: None,
        }
    }

    /// True when every proposal is evaluated and the surrogate cannot filter.
    pub fn is_ga_mode(&self) -> bool {
        self.k_propose == self.m_select
    }

    fn validate(&self, i: usize) -> Result<(), ConfigError> {
        let field = |name: &str| format!("schedule[{i}].{name}");
        if self.generations == 0 {
            return Err(invalid(field("generations"), "must be >= 1"));
        }
        if self.m_select == 0 {
            return Err(invalid(field("m_select"), "must be >= 1"));
        }
        if self.k_propose < self.m_select {
            return Err(invalid(
                field("k_propose"),
                format!("must be >= m_select ({}), got {}", self.m_select, self.k_propose),
            ));
        }
        if self.elite_k == 0 {
            return Err(invalid(field("elite_k"), "must be >= 1"));
        }
        self.elite_strategy.validate().map_err(|e| invalid(field("elite_strategy"), e.to_string()))?;
        self.acquisition.validate().map_err(|e| invalid(field("acquisition"), e.to_string()))?;
        if let Some(top) = self.uniform_among_top {
            if top < self.m_select {
                return Err(invalid(
                    field("uniform_among_top"),
                    format!("must be >= m_select ({}), got {top}", self.m_select),
                ));
            }
        }
        Ok(())
    }
}

fn default_refit_interval() -> usize {
    1
}

/// Full description of a campaign, normally read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub master_seed: u64,
    pub n_init: usize,
    /// Seed sequences; topped up by mutation (or drawn at random when empty).
    #[serde(default)]
    pub initial_sequences: Vec<Sequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub elite_source: EliteSource,
    /// Refit the surrogate every this many generations.
    #[serde(default = "default_refit_interval")]
    pub refit_interval: usize,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub mutation: MutationParams,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub surrogate: SurrogateConfig,
    pub schedule: Vec<SchedulePhase>,
}

impl CampaignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: CampaignConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("campaign config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_init < 2 {
            return Err(invalid("n_init", format!("must be >= 2, got {}", self.n_init)));
        }
        if self.schedule.is_empty() {
            return Err(invalid("schedule", "at least one phase is required"));
        }
        if self.refit_interval == 0 {
            return Err(invalid("refit_interval", "must be >= 1"));
        }
        if self.objective.name.trim().is_empty() {
            return Err(invalid("objective.name", "must not be empty"));
        }
        if self.objective.n_jobs == 0 {
            return Err(invalid("objective.n_jobs", "must be >= 1"));
        }
        self.mutation.validate().map_err(|e| invalid("mutation", e.to_string()))?;
        for (i, s) in self.initial_sequences.iter().enumerate() {
            if !self.mutation.admits_length(s.len()) {
                return Err(invalid(
                    format!("initial_sequences[{i}]"),
                    format!("length {} outside [{}, {}]", s.len(), self.mutation.min_length, self.mutation.max_length),
                ));
            }
        }
        if self.embedding.encoder == EncoderKind::Table && self.embedding.table_path.is_none() {
            return Err(invalid("embedding.table_path", "required when encoder = \"table\""));
        }
        if self.embedding.pca_components == Some(0) {
            return Err(invalid("embedding.pca_components", "must be >= 1"));
        }
        self.surrogate.validate().map_err(|e| invalid("surrogate", e.to_string()))?;
        for (i, phase) in self.schedule.iter().enumerate() {
            phase.validate(i)?;
        }
        Ok(())
    }

    pub fn total_generations(&self) -> usize {
        self.schedule.iter().map(|p| p.generations).sum()
    }

    /// Evaluations expected when nothing fails or collides.
    pub fn planned_evaluations(&self) -> usize {
        self.n_init + self.schedule.iter().map(|p| p.generations * p.m_select).sum::<usize>()
    }

    /// Phase index active at 1-based generation `t`.
    pub fn phase_at(&self, t: usize) -> Option<usize> {
        let mut end = 0;
        for (i, p) in self.schedule.iter().enumerate() {
            end += p.generations;
            if t >= 1 && t <= end {
                return Some(i);
            }
        }
        None
    }
}
