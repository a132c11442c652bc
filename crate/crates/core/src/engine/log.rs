//! On-disk campaign log.
//!
//! A log directory holds:
//! - `config.toml`: the effective configuration;
//! - `evaluations.jsonl`: one record per objective call, in evaluation order;
//! - `generations.jsonl`: an `init` record, one `generation` record per
//!   generation and a closing `counters` record;
//! - `checkpoint.json`: byte offsets of both logs at the last completed
//!   generation, plus the counters at that point;
//! - `surrogate.json`: the final surrogate, when one was fitted.
//!
//! Evaluation records carry a logical timestamp (their ordinal) rather than
//! wall-clock time so that identical runs produce byte-identical files.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::budget::{BudgetCounters, ComponentTimes};
use crate::seqcore::Sequence;

pub const EVALUATIONS_FILE: &str = "evaluations.jsonl";
pub const GENERATIONS_FILE: &str = "generations.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SURROGATE_FILE: &str = "surrogate.json";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: malformed record: {message}\n  {record}")]
    Malformed { path: PathBuf, line: usize, record: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LogError + '_ {
    move |source| LogError::Io { path: path.to_path_buf(), source }
}

/// One objective call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub generation: usize,
    pub sequence: Sequence,
    /// `None` when the evaluation failed.
    pub score: Option<f64>,
    pub acq_value: Option<f64>,
    pub surrogate_mean: Option<f64>,
    pub surrogate_std: Option<f64>,
    /// Ordinal of the evaluation within the campaign.
    pub timestamp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedCandidate {
    pub sequence: Sequence,
    pub score: f64,
    pub acq_value: Option<f64>,
    pub surrogate_mean: Option<f64>,
    pub surrogate_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCandidate {
    pub sequence: Sequence,
    pub error: String,
}

/// Summary of initialization.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InitRecord {
    pub n_init: usize,
    pub evaluated: usize,
    pub failed: usize,
    pub dedup_shortfall: usize,
    pub fallback_admitted: usize,
    pub pca_components: Option<usize>,
    pub pca_rank: Option<usize>,
    /// Whether an initial surrogate was fitted.
    #[serde(default)]
    pub refit: bool,
    pub validation_r2: Option<f64>,
    pub best_score: Option<f64>,
    pub best_sequence: Option<Sequence>,
    pub timing: ComponentTimes,
}

/// Everything that happened in one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub phase: usize,
    /// First generation of its phase.
    pub phase_start: bool,
    pub acquisition: String,
    pub k_propose: usize,
    pub m_select: usize,
    pub evaluated: Vec<EvaluatedCandidate>,
    pub failures: Vec<FailedCandidate>,
    pub dedup_shortfall: usize,
    pub fallback_admitted: usize,
    pub elites: Vec<Sequence>,
    /// Whether a surrogate was fitted at the end of this generation.
    pub refit: bool,
    pub validation_r2: Option<f64>,
    pub best_score: Option<f64>,
    pub best_sequence: Option<Sequence>,
    pub dataset_size: usize,
    pub timing: ComponentTimes,
}

/// A line of `generations.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GenerationLine {
    Init(InitRecord),
    Generation(GenerationRecord),
    Counters(BudgetCounters),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub master_seed: u64,
    pub initialized: bool,
    pub completed_generations: usize,
    pub evaluations_bytes: u64,
    pub generations_bytes: u64,
    pub next_timestamp: u64,
    pub counters: BudgetCounters,
    pub finished: bool,
}

impl Checkpoint {
    pub fn load(dir: &Path) -> Result<Self, LogError> {
        let path = dir.join(CHECKPOINT_FILE);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| LogError::Malformed {
            path: path.clone(),
            line: e.line(),
            record: text.lines().nth(e.line().saturating_sub(1)).unwrap_or("").to_string(),
            message: e.to_string(),
        })
    }
}

struct CountingWriter {
    inner: BufWriter<File>,
    bytes: u64,
    path: PathBuf,
}

impl CountingWriter {
    fn open(path: PathBuf, truncate_to: Option<u64>) -> Result<Self, LogError> {
        let file = match truncate_to {
            None => File::create(&path).map_err(io_err(&path))?,
            Some(len) => {
                let f = OpenOptions::new().write(true).open(&path).map_err(io_err(&path))?;
                f.set_len(len).map_err(io_err(&path))?;
                drop(f);
                OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?
            }
        };
        Ok(Self { inner: BufWriter::new(file), bytes: truncate_to.unwrap_or(0), path })
    }

    fn write_json<T: Serialize>(&mut self, value: &T) -> Result<(), LogError> {
        let mut line = serde_json::to_string(value).expect("log records serialize");
        line.push('\n');
        self.inner.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        self.bytes += line.len() as u64;
        Ok(())
    }

    fn flush(&mut self) -> Result<(), LogError> {
        self.inner.flush().map_err(io_err(&self.path))
    }
}

/// Incremental writer for a campaign log directory.
pub struct LogWriter {
    dir: PathBuf,
    evaluations: CountingWriter,
    generations: CountingWriter,
}

impl LogWriter {
    /// Starts a fresh log, replacing any previous one in `dir`.
    pub fn create(dir: &Path, config_toml: &str) -> Result<Self, LogError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let config_path = dir.join(CONFIG_FILE);
        std::fs::write(&config_path, config_toml).map_err(io_err(&config_path))?;
        let checkpoint = dir.join(CHECKPOINT_FILE);
        if checkpoint.exists() {
            std::fs::remove_file(&checkpoint).map_err(io_err(&checkpoint))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            evaluations: CountingWriter::open(dir.join(EVALUATIONS_FILE), None)?,
            generations: CountingWriter::open(dir.join(GENERATIONS_FILE), None)?,
        })
    }

    /// Reopens a log, discarding anything written after `checkpoint`.
    pub fn reopen(dir: &Path, checkpoint: &Checkpoint) -> Result<Self, LogError> {
        Ok(Self {
            dir: dir.to_path_buf(),
            evaluations: CountingWriter::open(dir.join(EVALUATIONS_FILE), Some(checkpoint.evaluations_bytes))?,
            generations: CountingWriter::open(dir.join(GENERATIONS_FILE), Some(checkpoint.generations_bytes))?,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_evaluation(&mut self, record: &EvaluationRecord) -> Result<(), LogError> {
        self.evaluations.write_json(record)
    }

    pub fn write_generation_line(&mut self, line: &GenerationLine) -> Result<(), LogError> {
        self.generations.write_json(line)
    }

    /// Flushes both logs and atomically replaces the checkpoint.
    pub fn checkpoint(
        &mut self,
        master_seed: u64,
        initialized: bool,
        completed_generations: usize,
        next_timestamp: u64,
        counters: &BudgetCounters,
        finished: bool,
    ) -> Result<(), LogError> {
        self.evaluations.flush()?;
        self.generations.flush()?;
        let cp = Checkpoint {
            version: CHECKPOINT_VERSION,
            master_seed,
            initialized,
            completed_generations,
            evaluations_bytes: self.evaluations.bytes,
            generations_bytes: self.generations.bytes,
            next_timestamp,
            counters: counters.clone(),
            finished,
        };
        let tmp = self.dir.join(format!("{CHECKPOINT_FILE}.tmp"));
        let text = serde_json::to_string_pretty(&cp).expect("checkpoint serializes");
        std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
        let path = self.dir.join(CHECKPOINT_FILE);
        std::fs::rename(&tmp, &path).map_err(io_err(&path))
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, LogError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| LogError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            record: line.clone(),
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_evaluations(dir: &Path) -> Result<Vec<EvaluationRecord>, LogError> {
    read_jsonl(&dir.join(EVALUATIONS_FILE))
}

pub fn read_generation_lines(dir: &Path) -> Result<Vec<GenerationLine>, LogError> {
    read_jsonl(&dir.join(GENERATIONS_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ts: u64, score: Option<f64>) -> EvaluationRecord {
        EvaluationRecord {
            generation: 1,
            sequence: Sequence::parse("EMAL").unwrap(),
            score,
            acq_value: Some(0.5),
            surrogate_mean: None,
            surrogate_std: None,
            timestamp: ts,
            error: score.is_none().then(|| "timeout".to_string()),
        }
    }

    #[test]
    fn reopen_discards_uncheckpointed_tail() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = LogWriter::create(dir.path(), "n_init = 2\n").unwrap();
        w.write_evaluation(&record(0, Some(1.0))).unwrap();
        w.checkpoint(1, true, 0, 1, &BudgetCounters::default(), false).unwrap();
        w.write_evaluation(&record(1, None)).unwrap();
        drop(w);
        assert_eq!(read_evaluations(dir.path()).unwrap().len(), 2);

        let cp = Checkpoint::load(dir.path()).unwrap();
        let mut w = LogWriter::reopen(dir.path(), &cp).unwrap();
        w.write_evaluation(&record(1, Some(2.0))).unwrap();
        w.checkpoint(1, true, 1, 2, &BudgetCounters::default(), false).unwrap();
        let records = read_evaluations(dir.path()).unwrap();
        assert_eq!(records, vec![record(0, Some(1.0)), record(1, Some(2.0))]);
    }

    #[test]
    fn malformed_lines_are_reported_with_position() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(EVALUATIONS_FILE), "{\"generation\": 0}\n").unwrap();
        match read_evaluations(dir.path()) {
            Err(LogError::Malformed { line, record, .. }) => {
                assert_eq!(line, 1);
                assert!(record.contains("generation"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn failed_evaluations_serialize_null_score() {
        let line = serde_json::to_string(&record(3, None)).unwrap();
        assert!(line.contains("\"score\":null") && line.contains("\"error\":\"timeout\""), "{line}");
    }
}
