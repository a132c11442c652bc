//! Elite (parent) selection over evaluated sequences.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::{rank_order, Direction, EvaluationDataset, ScoredSequence};
use super::sequence::Sequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("invalid selection strategy parameters: {0}")]
    InvalidStrategyParams(String),
    #[error("cannot select elites from an empty dataset")]
    EmptyDataset,
    #[error("elite count must be at least 1")]
    ZeroK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionStrategy {
    /// The `k` best entries.
    #[default]
    TopK,
    /// `k` draws with replacement from the best `ceil(fraction * n)` entries.
    TopFractionUniform { fraction: f64 },
    /// `k` draws with replacement, weight `exp(-rank / temperature)`.
    ExponentialRank { temperature: f64 },
    /// Entries strictly better than `value`, best first, at most `k`.
    Threshold { value: f64 },
}

impl SelectionStrategy {
    pub fn validate(&self) -> Result<(), SelectionError> {
        match *self {
            SelectionStrategy::TopK => Ok(()),
            SelectionStrategy::TopFractionUniform { fraction } => {
                if fraction > 0.0 && fraction <= 1.0 {
                    Ok(())
                } else {
                    Err(SelectionError::InvalidStrategyParams(format!("fraction {fraction} must lie in (0, 1]")))
                }
            }
            SelectionStrategy::ExponentialRank { temperature } => {
                if temperature > 0.0 && temperature.is_finite() {
                    Ok(())
                } else {
                    Err(SelectionError::InvalidStrategyParams(format!(
                        "temperature {temperature} must be positive and finite"
                    )))
                }
            }
            SelectionStrategy::Threshold { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(SelectionError::InvalidStrategyParams("threshold must be finite".into()))
                }
            }
        }
    }

    /// Whether the strategy draws from the random stream.
    pub fn is_stochastic(&self) -> bool {
        matches!(self, SelectionStrategy::TopFractionUniform { .. } | SelectionStrategy::ExponentialRank { .. })
    }
}

/// Selects `k` mutation parents from the whole dataset.
pub fn select_elites<R: Rng + ?Sized>(
    dataset: &EvaluationDataset,
    strategy: &SelectionStrategy,
    k: usize,
    direction: Direction,
    rng: &mut R,
) -> Result<Vec<Sequence>, SelectionError> {
    select_from_entries(dataset.entries().iter(), strategy, k, direction, rng)
}

/// Selects `k` parents from an arbitrary subset of evaluated entries.
///
/// When fewer than `k` entries exist, all of them are returned best first.
pub fn select_from_entries<'a, I, R>(
    entries: I,
    strategy: &SelectionStrategy,
    k: usize,
    direction: Direction,
    rng: &mut R,
) -> Result<Vec<Sequence>, SelectionError>
where
    I: IntoIterator<Item = &'a ScoredSequence>,
    R: Rng + ?Sized,
{
    strategy.validate()?;
    if k == 0 {
        return Err(SelectionError::ZeroK);
    }
    let mut ranked: Vec<&ScoredSequence> = entries.into_iter().collect();
    if ranked.is_empty() {
        return Err(SelectionError::EmptyDataset);
    }
    ranked.sort_by(|a, b| rank_order(direction, a, b));

    let is_threshold = matches!(strategy, SelectionStrategy::Threshold { .. });
    if ranked.len() < k && !is_threshold {
        return Ok(ranked.into_iter().map(|e| e.sequence.clone()).collect());
    }

    let picked = match *strategy {
        SelectionStrategy::TopK => ranked.into_iter().take(k).map(|e| e.sequence.clone()).collect(),
        SelectionStrategy::TopFractionUniform { fraction } => {
            let top = ((fraction * ranked.len() as f64).ceil() as usize).clamp(1, ranked.len());
            (0..k).map(|_| ranked[rng.gen_range(0..top)].sequence.clone()).collect()
        }
        SelectionStrategy::ExponentialRank { temperature } => {
            let weights = (0..ranked.len()).map(|rank| (-(rank as f64) / temperature).exp());
            let dist = WeightedIndex::new(weights).map_err(|e| SelectionError::InvalidStrategyParams(e.to_string()))?;
            (0..k).map(|_| ranked[dist.sample(rng)].sequence.clone()).collect()
        }
        SelectionStrategy::Threshold { value } => {
            ranked.into_iter().filter(|e| direction.beats(e.score, value)).take(k).map(|e| e.sequence.clone()).collect()
        }
    };
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset(items: &[(&str, f64)]) -> EvaluationDataset {
        let mut ds = EvaluationDataset::new();
        for (s, y) in items {
            ds.insert(Sequence::parse(s).unwrap(), *y, 0).unwrap();
        }
        ds
    }

    fn strs(v: &[Sequence]) -> Vec<&str> {
        v.iter().map(|s| s.as_str()).collect()
    }

    #[test]
    fn top_k_ranks_by_score() {
        let ds = dataset(&[("A", 1.0), ("C", 3.0), ("D", 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let got = select_elites(&ds, &SelectionStrategy::TopK, 2, Direction::Maximize, &mut rng).unwrap();
        assert_eq!(strs(&got), ["C", "D"]);
        let got = select_elites(&ds, &SelectionStrategy::TopK, 2, Direction::Minimize, &mut rng).unwrap();
        assert_eq!(strs(&got), ["A", "D"]);
    }

    #[test]
    fn ties_break_lexicographically() {
        let ds = dataset(&[("D", 1.0), ("A", 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let got = select_elites(&ds, &SelectionStrategy::TopK, 1, Direction::Maximize, &mut rng).unwrap();
        assert_eq!(strs(&got), ["A"]);
    }

    #[test]
    fn small_dataset_returns_everything() {
        let ds = dataset(&[("A", 1.0), ("C", 2.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for strategy in [
            SelectionStrategy::TopK,
            SelectionStrategy::TopFractionUniform { fraction: 0.5 },
            SelectionStrategy::ExponentialRank { temperature: 1.0 },
        ] {
            let got = select_elites(&ds, &strategy, 5, Direction::Maximize, &mut rng).unwrap();
            assert_eq!(strs(&got), ["C", "A"]);
        }
    }

    #[test]
    fn threshold_filters_and_truncates() {
        let ds = dataset(&[("A", 1.0), ("C", 3.0), ("D", 2.0), ("E", 4.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = SelectionStrategy::Threshold { value: 1.5 };
        let got = select_elites(&ds, &s, 2, Direction::Maximize, &mut rng).unwrap();
        assert_eq!(strs(&got), ["E", "C"]);
        let got = select_elites(&ds, &s, 3, Direction::Minimize, &mut rng).unwrap();
        assert_eq!(strs(&got), ["A"]);
    }

    #[test]
    fn invalid_params_rejected() {
        let ds = dataset(&[("A", 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for bad in [
            SelectionStrategy::TopFractionUniform { fraction: 0.0 },
            SelectionStrategy::TopFractionUniform { fraction: 1.5 },
            SelectionStrategy::ExponentialRank { temperature: 0.0 },
            SelectionStrategy::Threshold { value: f64::NAN },
        ] {
            assert!(matches!(
                select_elites(&ds, &bad, 1, Direction::Maximize, &mut rng),
                Err(SelectionError::InvalidStrategyParams(_))
            ));
        }
        assert_eq!(
            select_elites(&EvaluationDataset::new(), &SelectionStrategy::TopK, 1, Direction::Maximize, &mut rng),
            Err(SelectionError::EmptyDataset)
        );
    }

    #[test]
    fn exponential_rank_prefers_better_entries() {
        let items: Vec<(String, f64)> =
            (0..20).map(|i| (Sequence::from_valid_bytes(vec![b'A'; i + 1]).to_string(), i as f64)).collect();
        let refs: Vec<(&str, f64)> = items.iter().map(|(s, y)| (s.as_str(), *y)).collect();
        let ds = dataset(&refs);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = SelectionStrategy::ExponentialRank { temperature: 2.0 };
        let draws: Vec<Sequence> =
            (0..1000).flat_map(|_| select_elites(&ds, &s, 20, Direction::Maximize, &mut rng).unwrap()).collect();
        let best = draws.iter().filter(|s| s.len() == 20).count() as f64 / 20_000.0;
        let second = draws.iter().filter(|s| s.len() == 19).count() as f64 / 20_000.0;
        // p(rank 0) = 1 / sum_r exp(-r/2); ratio of rank 0 to rank 1 is e^{1/2}.
        let norm: f64 = (0..20).map(|r| (-(r as f64) / 2.0).exp()).sum();
        assert!((best - 1.0 / norm).abs() < 0.02);
        assert!((best / second - 0.5f64.exp()).abs() < 0.15);
    }
}
