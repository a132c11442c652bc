use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sequence::Sequence;

/// Optimization direction of an objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

impl Direction {
    /// Orders `a` before `b` when `a` is the better score.
    pub fn better_first(self, a: f64, b: f64) -> Ordering {
        match self {
            Direction::Maximize => b.total_cmp(&a),
            Direction::Minimize => a.total_cmp(&b),
        }
    }

    /// True when `candidate` strictly beats `reference`.
    pub fn beats(self, candidate: f64, reference: f64) -> bool {
        match self {
            Direction::Maximize => candidate > reference,
            Direction::Minimize => candidate < reference,
        }
    }

    /// Maps a score to a value where larger is always better.
    pub fn orient(self, value: f64) -> f64 {
        match self {
            Direction::Maximize => value,
            Direction::Minimize => -value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSequence {
    pub sequence: Sequence,
    pub score: f64,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("sequence {0} has already been evaluated")]
    Duplicate(Sequence),
    #[error("non-finite score {score} for {sequence}")]
    NonFinite { sequence: Sequence, score: f64 },
}

/// Append-only store of evaluated sequences, in evaluation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationDataset {
    entries: Vec<ScoredSequence>,
    index: HashMap<Sequence, usize>,
}

impl EvaluationDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, sequence: Sequence, score: f64, generation: usize) -> Result<(), DatasetError> {
        if !score.is_finite() {
            return Err(DatasetError::NonFinite { sequence, score });
        }
        if self.index.contains_key(&sequence) {
            return Err(DatasetError::Duplicate(sequence));
        }
        self.index.insert(sequence.clone(), self.entries.len());
        self.entries.push(ScoredSequence { sequence, score, generation });
        Ok(())
    }

    pub fn contains(&self, sequence: &Sequence) -> bool {
        self.index.contains_key(sequence)
    }

    pub fn get(&self, sequence: &Sequence) -> Option<&ScoredSequence> {
        self.index.get(sequence).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[ScoredSequence] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Best score under `direction`, if any.
    pub fn best(&self, direction: Direction) -> Option<&ScoredSequence> {
        self.entries.iter().min_by(|a, b| rank_order(direction, a, b))
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.score)
    }
}

impl EvaluationDataset {
    /// Rebuilds a dataset from entries in their original order.
    pub fn from_entries<I: IntoIterator<Item = ScoredSequence>>(entries: I) -> Result<Self, DatasetError> {
        let mut ds = EvaluationDataset::new();
        for e in entries {
            ds.insert(e.sequence, e.score, e.generation)?;
        }
        Ok(ds)
    }
}

/// Better score first, then lexicographically smaller sequence, then earlier generation.
pub fn rank_order(direction: Direction, a: &ScoredSequence, b: &ScoredSequence) -> Ordering {
    direction
        .better_first(a.score, b.score)
        .then_with(|| a.sequence.cmp(&b.sequence))
        .then_with(|| a.generation.cmp(&b.generation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(s: &str) -> Sequence {
        Sequence::parse(s).unwrap()
    }

    #[test]
    fn duplicate_insert_leaves_store_unchanged() {
        let mut ds = EvaluationDataset::new();
        ds.insert(seq("AA"), 1.0, 0).unwrap();
        let before = ds.clone();
        assert_eq!(ds.insert(seq("AA"), 2.0, 1), Err(DatasetError::Duplicate(seq("AA"))));
        assert_eq!(ds, before);
        assert_eq!(ds.get(&seq("AA")).unwrap().score, 1.0);
    }

    #[test]
    fn rejects_non_finite() {
        let mut ds = EvaluationDataset::new();
        assert!(ds.insert(seq("AA"), f64::NAN, 0).is_err());
        assert!(ds.insert(seq("AA"), f64::INFINITY, 0).is_err());
        assert!(ds.is_empty());
    }

    #[test]
    fn keeps_insertion_order_and_best() {
        let mut ds = EvaluationDataset::new();
        ds.insert(seq("E"), 3.0, 0).unwrap();
        ds.insert(seq("A"), 1.0, 0).unwrap();
        ds.insert(seq("C"), 3.0, 1).unwrap();
        let order: Vec<&str> = ds.entries().iter().map(|e| e.sequence.as_str()).collect();
        assert_eq!(order, ["E", "A", "C"]);
        // Equal scores: the lexicographically smaller sequence wins.
        assert_eq!(ds.best(Direction::Maximize).unwrap().sequence, seq("C"));
        assert_eq!(ds.best(Direction::Minimize).unwrap().sequence, seq("A"));
    }

    #[test]
    fn orient_makes_larger_better() {
        assert_eq!(Direction::Minimize.orient(2.0), -2.0);
        assert!(Direction::Minimize.beats(1.0, 2.0));
        assert!(!Direction::Maximize.beats(1.0, 1.0));
    }
}
