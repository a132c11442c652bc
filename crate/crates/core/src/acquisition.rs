//! Acquisition functions and top-m candidate selection.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::seqcore::{Direction, Sequence};
use crate::surrogate::PosteriorPrediction;

pub const DEFAULT_UCB_BETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AcquisitionError {
    #[error("{values} acquisition values for a pool of {pool}")]
    SizeMismatch { pool: usize, values: usize },
    #[error("m_select = {m_select} must lie in [1, {pool}]")]
    InvalidSelectCount { m_select: usize, pool: usize },
    #[error("invalid acquisition parameters: {0}")]
    InvalidParams(String),
}

/// Standard normal CDF, `erfc(-x / sqrt 2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Expected positive improvement over `incumbent` in the campaign direction.
pub fn expected_improvement(pred: PosteriorPrediction, incumbent: f64, direction: Direction) -> f64 {
    let delta = match direction {
        Direction::Maximize => pred.mean - incumbent,
        Direction::Minimize => incumbent - pred.mean,
    };
    let sigma = pred.std;
    if sigma > 0.0 {
        let z = delta / sigma;
        (delta * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
    } else {
        delta.max(0.0)
    }
}

/// Optimistic bound, oriented so that larger is always better.
pub fn upper_confidence_bound(pred: PosteriorPrediction, beta: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Maximize => pred.mean + beta * pred.std,
        Direction::Minimize => -(pred.mean - beta * pred.std),
    }
}

pub fn greedy_mean(pred: PosteriorPrediction, direction: Direction) -> f64 {
    direction.orient(pred.mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AcquisitionSpec {
    #[default]
    ExpectedImprovement,
    Ucb {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    GreedyMean,
}

fn default_beta() -> f64 {
    DEFAULT_UCB_BETA
}

impl AcquisitionSpec {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        match *self {
            AcquisitionSpec::Ucb { beta } if !(beta >= 0.0 && beta.is_finite()) => {
                Err(AcquisitionError::InvalidParams(format!("ucb beta must be a finite value >= 0, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AcquisitionSpec::ExpectedImprovement => "expected_improvement",
            AcquisitionSpec::Ucb { .. } => "ucb",
            AcquisitionSpec::GreedyMean => "greedy_mean",
        }
    }

    pub fn value(&self, pred: PosteriorPrediction, incumbent: f64, direction: Direction) -> f64 {
        match *self {
            AcquisitionSpec::ExpectedImprovement => expected_improvement(pred, incumbent, direction),
            AcquisitionSpec::Ucb { beta } => upper_confidence_bound(pred, beta, direction),
            AcquisitionSpec::GreedyMean => greedy_mean(pred, direction),
        }
    }
}

/// Accepts either a bare name (`"ucb"`) or a table (`{ kind = "ucb", beta = 1.5 }`).
pub fn deserialize_acquisition<'de, D: Deserializer<'de>>(de: D) -> Result<AcquisitionSpec, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Name(String),
        Table(AcquisitionSpec),
    }
    match Repr::deserialize(de)? {
        Repr::Table(spec) => Ok(spec),
        Repr::Name(name) => match name.as_str() {
            "expected_improvement" | "ei" => Ok(AcquisitionSpec::ExpectedImprovement),
            "ucb" => Ok(AcquisitionSpec::Ucb { beta: DEFAULT_UCB_BETA }),
            "greedy_mean" | "greedy" => Ok(AcquisitionSpec::GreedyMean),
            other => Err(serde::de::Error::custom(format!(
                "unknown acquisition {other:?}; expected expected_improvement, ucb or greedy_mean"
            ))),
        },
    }
}

fn check_sizes(pool: &[Sequence], values: &[f64], m_select: usize) -> Result<(), AcquisitionError> {
    if pool.len() != values.len() {
        return Err(AcquisitionError::SizeMismatch { pool: pool.len(), values: values.len() });
    }
    if m_select == 0 || m_select > pool.len() {
        return Err(AcquisitionError::InvalidSelectCount { m_select, pool: pool.len() });
    }
    Ok(())
}

/// Pool indices sorted by descending acquisition value, ties by sequence.
/// NaN values rank last.
fn ranked(pool: &[Sequence], values: &[f64]) -> Vec<usize> {
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.sort_by(|&a, &b| {
        key(values[b])
            .partial_cmp(&key(values[a]))
            .unwrap_or(Ordering::Equal)
            .then_with(|| pool[a].cmp(&pool[b]))
            .then(a.cmp(&b))
    });
    idx
}

/// Indices of the `m_select` largest acquisition values, best first.
///
/// When `m_select` equals the pool size every index is returned in pool
/// order, so the evaluated set does not depend on the values at all.
pub fn select_for_evaluation(
    pool: &[Sequence],
    values: &[f64],
    m_select: usize,
) -> Result<Vec<usize>, AcquisitionError> {
    check_sizes(pool, values, m_select)?;
    if m_select == pool.len() {
        return Ok((0..pool.len()).collect());
    }
    let mut idx = ranked(pool, values);
    idx.truncate(m_select);
    Ok(idx)
}

/// Samples `m_select` indices uniformly from the `top` best-ranked candidates.
///
/// Returned indices keep their acquisition rank order.
pub fn select_uniform_among_top<R: Rng + ?Sized>(
    pool: &[Sequence],
    values: &[f64],
    m_select: usize,
    top: usize,
    rng: &mut R,
) -> Result<Vec<usize>, AcquisitionError> {
    check_sizes(pool, values, m_select)?;
    if m_select == pool.len() {
        return Ok((0..pool.len()).collect());
    }
    let ranked = ranked(pool, values);
    let top = top.clamp(m_select, pool.len());
    let mut picks = sample(rng, top, m_select).into_vec();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|r| ranked[r]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(mean: f64, std: f64) -> PosteriorPrediction {
        PosteriorPrediction { mean, std }
    }

    fn seqs(items: &[&str]) -> Vec<Sequence> {
        items.iter().map(|s| Sequence::parse(s).unwrap()).collect()
    }

    #[test]
    fn ei_limits() {
        assert_eq!(expected_improvement(pred(2.0, 0.0), 1.0, Direction::Maximize), 1.0);
        assert_eq!(expected_improvement(pred(0.0, 0.0), 1.0, Direction::Maximize), 0.0);
        assert_eq!(expected_improvement(pred(0.0, 0.0), 1.0, Direction::Minimize), 1.0);
        let at_incumbent = expected_improvement(pred(3.0, 1.0), 3.0, Direction::Maximize);
        assert!((at_incumbent - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cdf_reference_values() {
        // Reference values from an arbitrary-precision evaluation.
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_542_9),
            (-1.0, 0.158_655_253_931_457_05),
            (2.5, 0.993_790_334_674_223_8),
            (-3.0, 0.001_349_898_031_630_094_6),
            (-8.0, 6.220_960_574_271_784e-16),
            (5.0, 0.999_999_713_348_428_1),
        ];
        for (x, expected) in cases {
            assert!((normal_cdf(x) - expected).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn ucb_examples() {
        assert_eq!(upper_confidence_bound(pred(1.0, 2.0), 1.5, Direction::Maximize), 4.0);
        assert_eq!(upper_confidence_bound(pred(1.0, 2.0), 0.0, Direction::Maximize), 1.0);
        assert_eq!(upper_confidence_bound(pred(1.0, 0.0), 7.0, Direction::Maximize), 1.0);
        assert_eq!(upper_confidence_bound(pred(1.0, 2.0), 1.5, Direction::Minimize), 2.0);
        assert_eq!(greedy_mean(pred(1.5, 9.0), Direction::Minimize), -1.5);
    }

    #[test]
    fn selection_contracts() {
        let pool = seqs(&["AAA", "CCC", "DDD"]);
        assert_eq!(select_for_evaluation(&pool, &[0.1, 0.9, 0.5], 1).unwrap(), vec![1]);
        assert_eq!(select_for_evaluation(&pool, &[5.0, 1.0, 3.0], 3).unwrap(), vec![0, 1, 2]);
        let pool = seqs(&["WWW", "CCC", "AAA", "DDD"]);
        assert_eq!(select_for_evaluation(&pool, &[1.0; 4], 2).unwrap(), vec![2, 1]);
        assert_eq!(
            select_for_evaluation(&pool, &[1.0; 3], 2),
            Err(AcquisitionError::SizeMismatch { pool: 4, values: 3 })
        );
        assert!(select_for_evaluation(&pool, &[1.0; 4], 0).is_err());
        assert!(select_for_evaluation(&pool, &[1.0; 4], 5).is_err());
    }

    #[test]
    fn nan_values_rank_last() {
        let pool = seqs(&["AAA", "CCC", "DDD"]);
        assert_eq!(select_for_evaluation(&pool, &[f64::NAN, 0.0, -1.0], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn uniform_among_top_stays_in_top() {
        use rand::SeedableRng;
        let pool: Vec<Sequence> = (0..30).map(|i| Sequence::parse(&"A".repeat(i + 1)).unwrap()).collect();
        let values: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let picks = select_uniform_among_top(&pool, &values, 3, 10, &mut rng).unwrap();
            assert_eq!(picks.len(), 3);
            assert!(picks.iter().all(|&i| i >= 20));
        }
    }

    #[test]
    fn spec_parses_from_name_or_table() {
        #[derive(Deserialize)]
        struct Wrap {
            #[serde(deserialize_with = "deserialize_acquisition")]
            a: AcquisitionSpec,
        }
        let w: Wrap = toml::from_str("a = \"ucb\"").unwrap();
        assert_eq!(w.a, AcquisitionSpec::Ucb { beta: DEFAULT_UCB_BETA });
        let w: Wrap = toml::from_str("a = { kind = \"ucb\", beta = 0.5 }").unwrap();
        assert_eq!(w.a, AcquisitionSpec::Ucb { beta: 0.5 });
        let w: Wrap = toml::from_str("a = \"expected_improvement\"").unwrap();
        assert_eq!(w.a, AcquisitionSpec::ExpectedImprovement);
        assert!(toml::from_str::<Wrap>("a = \"thompson\"").is_err());
        assert!(AcquisitionSpec::Ucb { beta: -1.0 }.validate().is_err());
    }
}
