//! Fixtures shared by the benchmarks.

use boga_core::embed::{Embedder, Encoder, FeatureConfig};
use boga_core::seqcore::{Alphabet, ALPHABET_SIZE};
use boga_core::{EmbeddingVector, Landscape, Sequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` random sequences with lengths in `8..=25`.
pub fn random_sequences(n: usize, seed: u64) -> Vec<Sequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(8..=25);
            let text: String = (0..len).map(|_| Alphabet::residue(rng.gen_range(0..ALPHABET_SIZE)) as char).collect();
            Sequence::parse(&text).expect("alphabet letters")
        })
        .collect()
}

/// Physicochemical features projected onto 20 principal axes.
pub fn embedder(seqs: &[Sequence]) -> Embedder {
    Embedder::fit(Encoder::Physchem(FeatureConfig::default()), seqs, Some(20)).expect("PCA fits")
}

/// Embedded sequences labelled by `landscape`.
pub fn labelled(seqs: &[Sequence], embedder: &Embedder, landscape: Landscape) -> Vec<(EmbeddingVector, f64)> {
    seqs.iter().map(|s| (embedder.embed(s).expect("embeds"), landscape.evaluate(s))).collect()
}
