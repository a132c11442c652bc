//! Cross product of `k_propose` settings and seeds over one base campaign.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use boga_core::engine::{run_campaign, ConfigError, GenerationRecord};
use boga_core::{CampaignConfig, CampaignLog};
use serde::Deserialize;
use thiserror::Error;

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sweep spec parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid sweep field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("base config: {0}")]
    Base(#[from] ConfigError),
}

impl SweepError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        SweepError::Invalid { field: field.into(), message: message.into() }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/sweep")
}

fn default_final_window() -> usize {
    10
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    /// Path to the base campaign config, relative to the sweep file.
    base_config: Option<PathBuf>,
    /// Inline base campaign config.
    base: Option<toml::Table>,
    k_propose: Vec<usize>,
    seeds: Vec<u64>,
    m_select: usize,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default = "default_final_window")]
    final_window: usize,
    #[serde(default = "default_jobs")]
    jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: CampaignConfig,
    pub k_propose: Vec<usize>,
    pub seeds: Vec<u64>,
    pub m_select: usize,
    pub output_dir: PathBuf,
    /// Generations at the end of each run averaged into the comparison.
    pub final_window: usize,
    /// Cells run concurrently.
    pub jobs: usize,
}

impl SweepSpec {
    /// Parses a sweep file; `base_dir` resolves a relative `base_config`.
    /// `output_dir`, like a campaign's, is relative to the working directory.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, SweepError> {
        let file: SweepFile = toml::from_str(text)?;
        let base = match (file.base_config, file.base) {
            (Some(path), None) => CampaignConfig::load(&base_dir.join(path))?,
            (None, Some(table)) => CampaignConfig::from_toml_str(&toml::to_string(&table).expect("tables serialize"))?,
            (Some(_), Some(_)) => {
                return Err(SweepError::invalid("base", "give either base_config or [base], not both"))
            }
            (None, None) => return Err(SweepError::invalid("base", "missing base_config or [base]")),
        };
        let spec = SweepSpec {
            base,
            k_propose: file.k_propose,
            seeds: file.seeds,
            m_select: file.m_select,
            output_dir: file.output_dir,
            final_window: file.final_window,
            jobs: file.jobs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = fs::read_to_string(path).map_err(|source| SweepError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.k_propose.is_empty() {
            return Err(SweepError::invalid("k_propose", "at least one value is required"));
        }
        if self.seeds.is_empty() {
            return Err(SweepError::invalid("seeds", "at least one seed is required"));
        }
        if self.m_select == 0 {
            return Err(SweepError::invalid("m_select", "must be >= 1"));
        }
        let mut seen = HashSet::new();
        for &k in &self.k_propose {
            if !seen.insert(k) {
                return Err(SweepError::invalid("k_propose", format!("duplicate value {k}")));
            }
            if k < self.m_select {
                return Err(SweepError::invalid("k_propose", format!("{k} is below m_select = {}", self.m_select)));
            }
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(SweepError::invalid("seeds", format!("duplicate seed {s}")));
        }
        if self.final_window == 0 {
            return Err(SweepError::invalid("final_window", "must be >= 1"));
        }
        if self.jobs == 0 {
            return Err(SweepError::invalid("jobs", "must be >= 1"));
        }
        Ok(())
    }

    pub fn cell_dir(&self, k: usize, seed: u64) -> PathBuf {
        self.output_dir.join(format!("k{k}")).join(format!("seed{seed}"))
    }

    /// Campaign config of one cell: the base with every phase's pool and
    /// batch sizes replaced, and the cell's seed. Cells sharing a seed share
    /// every random stream that does not depend on `k_propose`.
    pub fn cell_config(&self, k: usize, seed: u64) -> CampaignConfig {
        let mut config = self.base.clone();
        config.master_seed = seed;
        for phase in &mut config.schedule {
            phase.k_propose = k;
            phase.m_select = self.m_select;
        }
        config.output_dir = Some(self.cell_dir(k, seed));
        config
    }

    pub fn cells(&self) -> Vec<(usize, u64)> {
        self.k_propose.iter().flat_map(|&k| self.seeds.iter().map(move |&s| (k, s))).collect()
    }
}

/// Mean score of the successful evaluations in the last `window` generations.
pub fn final_window_mean(generations: &[GenerationRecord], window: usize) -> Option<f64> {
    let last = generations.last()?.generation;
    let from = last.saturating_sub(window) + 1;
    let scores: Vec<f64> =
        generations.iter().filter(|g| g.generation >= from).flat_map(|g| g.evaluated.iter().map(|c| c.score)).collect();
    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Done { final_window_mean: Option<f64>, best_score: Option<f64>, objective_evals: u64, objective_failures: u64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub k_propose: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// In `k_propose`-major order, matching the spec.
    pub cells: Vec<CellResult>,
    pub comparison_csv: PathBuf,
    pub summary_csv: PathBuf,
}

impl SweepOutcome {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| matches!(c.status, CellStatus::Failed(_))).count()
    }
}

fn summarize(log: &CampaignLog, window: usize) -> CellStatus {
    CellStatus::Done {
        final_window_mean: final_window_mean(&log.generations, window),
        best_score: log.best().map(|b| b.score),
        objective_evals: log.counters.objective_evals,
        objective_failures: log.counters.objective_failures,
    }
}

fn run_cell(spec: &SweepSpec, k: usize, seed: u64) -> CellResult {
    let config = spec.cell_config(k, seed);
    let dir = spec.cell_dir(k, seed);
    let status = match run_campaign(config) {
        Ok(log) => summarize(&log, spec.final_window),
        Err(e) => {
            log::error!("sweep cell k_propose={k} seed={seed} failed: {e}");
            CellStatus::Failed(e.to_string())
        }
    };
    CellResult { k_propose: k, seed, dir, status }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_tables(spec: &SweepSpec, cells: &[CellResult]) -> Result<(PathBuf, PathBuf), SweepError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: csv::Error| SweepError::Io { path: path.clone(), source: std::io::Error::other(e) }
    };
    let comparison = spec.output_dir.join(COMPARISON_CSV);
    let mut w = csv::Writer::from_path(&comparison).map_err(io(&comparison))?;
    w.write_record([
        "k_propose",
        "seed",
        "status",
        "final_window_mean",
        "best_score",
        "objective_evals",
        "objective_failures",
        "log_dir",
        "error",
    ])
    .map_err(io(&comparison))?;
    for c in cells {
        let dir = c.dir.display().to_string();
        let row = match &c.status {
            CellStatus::Done { final_window_mean, best_score, objective_evals, objective_failures } => [
                c.k_propose.to_string(),
                c.seed.to_string(),
                "ok".into(),
                opt(*final_window_mean),
                opt(*best_score),
                objective_evals.to_string(),
                objective_failures.to_string(),
                dir,
                String::new(),
            ],
            CellStatus::Failed(msg) => [
                c.k_propose.to_string(),
                c.seed.to_string(),
                "failed".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                dir,
                msg.clone(),
            ],
        };
        w.write_record(&row).map_err(io(&comparison))?;
    }
    w.flush().map_err(|source| SweepError::Io { path: comparison.clone(), source })?;

    let summary = spec.output_dir.join(SUMMARY_CSV);
    let mut w = csv::Writer::from_path(&summary).map_err(io(&summary))?;
    w.write_record(["k_propose", "runs_ok", "runs_failed", "mean_final_window_fitness"]).map_err(io(&summary))?;
    for &k in &spec.k_propose {
        let mine: Vec<&CellResult> = cells.iter().filter(|c| c.k_propose == k).collect();
        let means: Vec<f64> = mine
            .iter()
            .filter_map(|c| match c.status {
                CellStatus::Done { final_window_mean, .. } => final_window_mean,
                CellStatus::Failed(_) => None,
            })
            .collect();
        let ok = mine.iter().filter(|c| matches!(c.status, CellStatus::Done { .. })).count();
        let mean = (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
        w.write_record([k.to_string(), ok.to_string(), (mine.len() - ok).to_string(), opt(mean)])
            .map_err(io(&summary))?;
    }
    w.flush().map_err(|source| SweepError::Io { path: summary.clone(), source })?;
    Ok((comparison, summary))
}

/// Runs every cell, continuing past failures, and writes the comparison tables.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome, SweepError> {
    spec.validate()?;
    fs::create_dir_all(&spec.output_dir).map_err(|source| SweepError::Io { path: spec.output_dir.clone(), source })?;
    let cells = spec.cells();
    let results: Mutex<Vec<Option<CellResult>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..spec.jobs.min(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(k, seed)) = cells.get(i) else { break };
                log::info!("sweep cell {}/{}: k_propose={k} seed={seed}", i + 1, cells.len());
                let r = run_cell(spec, k, seed);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let cells: Vec<CellResult> =
        results.into_inner().unwrap().into_iter().map(|r| r.expect("every cell ran")).collect();
    let (comparison_csv, summary_csv) = write_tables(spec, &cells)?;
    Ok(SweepOutcome { cells, comparison_csv, summary_csv })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
k_propose = [10, 50]
seeds = [1, 2]
m_select = 5

[base]
n_init = 10
[base.objective]
name = "sheet"
evaluator = { kind = "builtin", landscape = "sheet" }
[[base.schedule]]
generations = 3
m_select = 2
k_propose = 4
"#;

    #[test]
    fn inline_base_and_cells() {
        let spec = SweepSpec::from_toml_str(BASE, Path::new("")).unwrap();
        assert_eq!(spec.cells(), vec![(10, 1), (10, 2), (50, 1), (50, 2)]);
        let c = spec.cell_config(50, 2);
        assert_eq!(c.master_seed, 2);
        assert_eq!((c.schedule[0].k_propose, c.schedule[0].m_select), (50, 5));
        assert_eq!(c.output_dir, Some(PathBuf::from("runs/sweep/k50/seed2")));
    }

    #[test]
    fn rejects_bad_specs() {
        let cases = [
            ("k_propose = [10, 50]", "k_propose = [10, 10]", "duplicate"),
            ("k_propose = [10, 50]", "k_propose = [4, 50]", "below m_select"),
            ("seeds = [1, 2]", "seeds = [3, 3]", "duplicate seed"),
            ("seeds = [1, 2]", "seeds = []", "seed"),
        ];
        for (from, to, needle) in cases {
            let err = SweepSpec::from_toml_str(&BASE.replace(from, to), Path::new(".")).unwrap_err();
            assert!(err.to_string().contains(needle), "{err}");
        }
        let err = SweepSpec::from_toml_str("k_propose = [10]\nseeds = [1]\nm_select = 5\n", Path::new("."));
        assert!(matches!(err, Err(SweepError::Invalid { .. })));
    }

    #[test]
    fn final_window_averages_trailing_generations() {
        use boga_core::engine::EvaluatedCandidate;
        use boga_core::Sequence;
        let record = |g: usize, scores: &[f64]| GenerationRecord {
            generation: g,
            phase: 0,
            phase_start: g == 1,
            acquisition: "expected_improvement".into(),
            k_propose: 2,
            m_select: 2,
            evaluated: scores
                .iter()
                .map(|&s| EvaluatedCandidate {
                    sequence: Sequence::parse("AAAA").unwrap(),
                    score: s,
                    acq_value: None,
                    surrogate_mean: None,
                    surrogate_std: None,
                })
                .collect(),
            failures: vec![],
            dedup_shortfall: 0,
            fallback_admitted: 0,
            elites: vec![],
            refit: true,
            validation_r2: None,
            best_score: None,
            best_sequence: None,
            dataset_size: 0,
            timing: Default::default(),
        };
        let gens = vec![record(1, &[100.0]), record(2, &[1.0, 3.0]), record(3, &[5.0])];
        assert_eq!(final_window_mean(&gens, 2), Some(3.0));
        assert_eq!(final_window_mean(&gens, 10), Some(27.25));
        assert_eq!(final_window_mean(&[], 10), None);
    }
}
