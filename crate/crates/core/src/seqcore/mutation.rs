//! Point mutations and proposal-pool generation.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sequence::{Alphabet, Sequence, ALPHABET_SIZE};

/// Total mutation attempts per requested proposal before duplicates are admitted.
pub const DEDUP_RETRY_FACTOR: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid mutation parameters: {0}")]
pub struct MutationParamsError(pub String);

/// Rates and length bounds for the mutation operator.
///
/// `substitution_rate` applies independently to every residue; insertion and
/// deletion each fire at most once per call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationParams {
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
    pub min_length: usize,
    pub max_length: usize,
}

impl MutationParams {
    pub fn new(
        substitution_rate: f64,
        insertion_rate: f64,
        deletion_rate: f64,
        min_length: usize,
        max_length: usize,
    ) -> Result<Self, MutationParamsError> {
        let params = Self { substitution_rate, insertion_rate, deletion_rate, min_length, max_length };
        params.validate()?;
        Ok(params)
    }

    /// One rate for all three operators.
    pub fn uniform(rate: f64, min_length: usize, max_length: usize) -> Result<Self, MutationParamsError> {
        Self::new(rate, rate, rate, min_length, max_length)
    }

    pub fn validate(&self) -> Result<(), MutationParamsError> {
        for (name, rate) in [
            ("substitution_rate", self.substitution_rate),
            ("insertion_rate", self.insertion_rate),
            ("deletion_rate", self.deletion_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(MutationParamsError(format!("{name} = {rate} is outside [0, 1]")));
            }
        }
        if self.min_length < 1 {
            return Err(MutationParamsError("min_length must be at least 1".into()));
        }
        if self.min_length > self.max_length {
            return Err(MutationParamsError(format!(
                "min_length {} exceeds max_length {}",
                self.min_length, self.max_length
            )));
        }
        Ok(())
    }

    pub fn admits_length(&self, len: usize) -> bool {
        (self.min_length..=self.max_length).contains(&len)
    }
}

impl Default for MutationParams {
    fn default() -> Self {
        Self { substitution_rate: 0.05, insertion_rate: 0.05, deletion_rate: 0.05, min_length: 8, max_length: 25 }
    }
}

/// Applies substitution, then insertion, then deletion to a copy of `parent`.
///
/// Substituted residues are drawn uniformly from the 19 letters other than the
/// current one. Insertion is skipped at `max_length` and deletion at
/// `min_length`, so a parent inside the bounds yields a child inside them.
pub fn mutate<R: Rng + ?Sized>(parent: &Sequence, params: &MutationParams, rng: &mut R) -> Sequence {
    let mut residues: Vec<u8> = parent.as_bytes().to_vec();

    for residue in residues.iter_mut() {
        if rng.gen::<f64>() < params.substitution_rate {
            let current = Alphabet::index_of(*residue).expect("valid residue");
            let mut pick = rng.gen_range(0..ALPHABET_SIZE - 1);
            if pick >= current {
                pick += 1;
            }
            *residue = Alphabet::residue(pick);
        }
    }

    if rng.gen::<f64>() < params.insertion_rate && residues.len() < params.max_length {
        let pos = rng.gen_range(0..=residues.len());
        let letter = Alphabet::residue(rng.gen_range(0..ALPHABET_SIZE));
        residues.insert(pos, letter);
    }

    if rng.gen::<f64>() < params.deletion_rate && residues.len() > params.min_length {
        let pos = rng.gen_range(0..residues.len());
        residues.remove(pos);
    }

    Sequence::from_valid_bytes(residues)
}

/// A batch of mutated candidates awaiting acquisition scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalPool {
    pub candidates: Vec<Sequence>,
    /// Candidates admitted after the retry cap without the novelty check.
    pub fallback_admitted: usize,
    pub attempts: usize,
}

impl ProposalPool {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Mutates uniformly chosen elites until `k_propose` candidates are collected.
///
/// Candidates must be absent from `seen` and distinct within the pool until
/// `DEDUP_RETRY_FACTOR * k_propose` attempts have been spent; after that every
/// further mutant is admitted as is.
///
/// # Panics
/// If `elites` is empty.
pub fn propose_pool<R, F>(
    elites: &[Sequence],
    params: &MutationParams,
    k_propose: usize,
    seen: F,
    rng: &mut R,
) -> ProposalPool
where
    R: Rng + ?Sized,
    F: Fn(&Sequence) -> bool,
{
    assert!(!elites.is_empty(), "propose_pool needs at least one elite");
    let cap = DEDUP_RETRY_FACTOR * k_propose;
    let mut candidates = Vec::with_capacity(k_propose);
    let mut in_pool: HashSet<Sequence> = HashSet::with_capacity(k_propose);
    let mut attempts = 0usize;
    let mut fallback_admitted = 0usize;

    while candidates.len() < k_propose {
        let parent = &elites[rng.gen_range(0..elites.len())];
        let child = mutate(parent, params, rng);
        attempts += 1;
        if attempts > cap {
            fallback_admitted += 1;
            candidates.push(child);
        } else if !seen(&child) && !in_pool.contains(&child) {
            in_pool.insert(child.clone());
            candidates.push(child);
        }
    }

    if fallback_admitted > 0 {
        log::warn!(
            "proposal pool hit the retry cap after {cap} attempts; admitted {fallback_admitted} non-novel candidates"
        );
    }

    ProposalPool { candidates, fallback_admitted, attempts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(s: &str) -> Sequence {
        Sequence::parse(s).unwrap()
    }

    #[test]
    fn zero_rates_are_identity() {
        let params = MutationParams::new(0.0, 0.0, 0.0, 1, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(mutate(&seq("AAAA"), &params, &mut rng), seq("AAAA"));
        }
    }

    #[test]
    fn insertion_at_max_length_is_skipped() {
        let params = MutationParams::new(0.0, 1.0, 0.0, 1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert_eq!(mutate(&seq("ACDE"), &params, &mut rng).len(), 4);
        }
    }

    #[test]
    fn deletion_at_min_length_is_skipped() {
        let params = MutationParams::new(0.0, 0.0, 1.0, 4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(mutate(&seq("ACDE"), &params, &mut rng), seq("ACDE"));
        }
    }

    #[test]
    fn full_substitution_changes_every_residue() {
        let params = MutationParams::new(1.0, 0.0, 0.0, 1, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let parent = seq("ACDEFGHIKL");
        for _ in 0..200 {
            let child = mutate(&parent, &params, &mut rng);
            assert!(child.as_bytes().iter().zip(parent.as_bytes()).all(|(a, b)| a != b));
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(MutationParams::new(1.5, 0.0, 0.0, 1, 2).is_err());
        assert!(MutationParams::new(0.1, -0.1, 0.0, 1, 2).is_err());
        assert!(MutationParams::new(0.1, 0.1, 0.1, 0, 2).is_err());
        assert!(MutationParams::new(0.1, 0.1, 0.1, 5, 2).is_err());
    }

    #[test]
    fn zero_rate_pool_falls_back_to_copies() {
        let params = MutationParams::new(0.0, 0.0, 0.0, 1, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pool = propose_pool(&[seq("AAAA")], &params, 3, |_| false, &mut rng);
        assert_eq!(pool.candidates, vec![seq("AAAA"); 3]);
        // First copy is novel; the other two come from the fallback.
        assert_eq!(pool.fallback_admitted, 2);
        assert_eq!(pool.attempts, 3 * DEDUP_RETRY_FACTOR + 2);
    }

    #[test]
    fn exhausted_neighbourhood_uses_fallback() {
        // Every single-residue sequence is already seen, so a length-1 elite at
        // substitution rate 1 has no novel neighbour.
        let params = MutationParams::new(1.0, 0.0, 0.0, 1, 1).unwrap();
        let seen: HashSet<Sequence> =
            Alphabet::residues().iter().map(|&r| Sequence::from_valid_bytes(vec![r])).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pool = propose_pool(&[seq("A")], &params, 5, |s| seen.contains(s), &mut rng);
        assert_eq!(pool.len(), 5);
        assert_eq!(pool.fallback_admitted, 5);
        assert!(pool.candidates.iter().all(|c| c.len() == 1 && c != &seq("A")));
    }

    #[test]
    fn large_pool_respects_bounds_and_novelty() {
        let params = MutationParams::uniform(0.05, 8, 25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let elites: Vec<Sequence> = (0..10)
            .map(|i| {
                let len = 8 + i;
                let bytes = (0..len).map(|j| Alphabet::residue((i * 7 + j * 3) % 20)).collect();
                Sequence::from_valid_bytes(bytes)
            })
            .collect();
        let elite_set: HashSet<Sequence> = elites.iter().cloned().collect();
        let pool = propose_pool(&elites, &params, 500, |s| elite_set.contains(s), &mut rng);
        assert_eq!(pool.len(), 500);
        assert!(pool.candidates.iter().all(|c| params.admits_length(c.len())));
        assert_eq!(pool.fallback_admitted, 0);
        let distinct: HashSet<&Sequence> = pool.candidates.iter().collect();
        assert_eq!(distinct.len(), 500);
        assert!(pool.candidates.iter().all(|c| !elite_set.contains(c)));
    }
}
