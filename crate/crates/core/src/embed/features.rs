use serde::{Deserialize, Serialize};

use crate::objectives::{mean_moment_with_offset, HydrophobicityScale, HELIX_ANGLE_DEG};
use crate::seqcore::{Sequence, ALPHABET_SIZE};

const HYDRO_WINDOW: usize = 5;
const DIPEPTIDE_LEN: usize = ALPHABET_SIZE * ALPHABET_SIZE;

/// Options for the physicochemical featurizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Include the 400-wide dipeptide frequency block.
    #[serde(default)]
    pub dipeptide: bool,
}

impl FeatureConfig {
    pub fn dimension(&self) -> usize {
        ALPHABET_SIZE + if self.dipeptide { DIPEPTIDE_LEN } else { 0 } + 1 + 3
    }
}

/// Fixed-length physicochemical description of a sequence.
///
/// Layout: composition (20) | dipeptide frequencies (400, optional) |
/// length (1) | hydrophobicity mean, max window-5 mean, hydrophobic moment (3).
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub values: Vec<f64>,
    dipeptide: bool,
}

impl RawFeatures {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values, dipeptide: false }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn composition(&self) -> &[f64] {
        &self.values[..ALPHABET_SIZE]
    }

    pub fn dipeptide(&self) -> Option<&[f64]> {
        self.dipeptide.then(|| &self.values[ALPHABET_SIZE..ALPHABET_SIZE + DIPEPTIDE_LEN])
    }

    pub fn length(&self) -> f64 {
        self.values[self.values.len() - 4]
    }

    /// `[mean, max window mean, moment]`.
    pub fn hydrophobicity_stats(&self) -> &[f64] {
        &self.values[self.values.len() - 3..]
    }
}

pub fn featurize(seq: &Sequence, config: &FeatureConfig) -> RawFeatures {
    let scale = HydrophobicityScale::eisenberg();
    let idx: Vec<usize> = seq.indices().collect();
    let len = idx.len() as f64;
    let mut values = Vec::with_capacity(config.dimension());

    let mut composition = [0.0; ALPHABET_SIZE];
    for &i in &idx {
        composition[i] += 1.0;
    }
    values.extend(composition.iter().map(|c| c / len));

    if config.dipeptide {
        let mut pairs = vec![0.0; DIPEPTIDE_LEN];
        for w in idx.windows(2) {
            pairs[w[0] * ALPHABET_SIZE + w[1]] += 1.0;
        }
        let n_pairs = idx.len().saturating_sub(1).max(1) as f64;
        values.extend(pairs.iter().map(|c| c / n_pairs));
    }

    values.push(len);

    let h: Vec<f64> = idx.iter().map(|&i| scale.value(i)).collect();
    let mean = h.iter().sum::<f64>() / len;
    let window = HYDRO_WINDOW.min(h.len());
    let max_window = h.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).fold(f64::NEG_INFINITY, f64::max);
    let moment = mean_moment_with_offset(seq, scale, HELIX_ANGLE_DEG, 0);
    values.extend([mean, max_window, moment]);

    RawFeatures { values, dipeptide: config.dipeptide }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::Alphabet;

    fn seq(s: &str) -> Sequence {
        Sequence::parse(s).unwrap()
    }

    #[test]
    fn homopolymer_composition_and_length() {
        let f = featurize(&seq("AAAA"), &FeatureConfig::default());
        assert_eq!(f.dimension(), 24);
        let a = Alphabet::index_of(b'A').unwrap();
        for (i, c) in f.composition().iter().enumerate() {
            assert_eq!(*c, if i == a { 1.0 } else { 0.0 });
        }
        assert_eq!(f.length(), 4.0);
    }

    #[test]
    fn order_only_shows_in_dipeptides() {
        let cfg = FeatureConfig { dipeptide: true };
        let ac = featurize(&seq("AC"), &cfg);
        let ca = featurize(&seq("CA"), &cfg);
        assert_eq!(ac.dimension(), 424);
        assert_eq!(ac.composition(), ca.composition());
        assert_ne!(ac.dipeptide(), ca.dipeptide());
        assert!(featurize(&seq("AC"), &FeatureConfig::default()).dipeptide().is_none());
    }

    #[test]
    fn hydrophobicity_mean_matches_scale() {
        let f = featurize(&seq("EMAL"), &FeatureConfig::default());
        let expected = (-0.74 + 0.64 + 0.62 + 1.06) / 4.0;
        assert!((f.hydrophobicity_stats()[0] - expected).abs() < 1e-12);
        // Shorter than the window: the window mean is the overall mean.
        assert!((f.hydrophobicity_stats()[1] - expected).abs() < 1e-12);
    }

    #[test]
    fn window_max_picks_best_stretch() {
        let f = featurize(&seq("RRRRRIIIII"), &FeatureConfig::default());
        assert!((f.hydrophobicity_stats()[1] - 1.38).abs() < 1e-12);
    }

    #[test]
    fn deterministic_bits() {
        let cfg = FeatureConfig { dipeptide: true };
        let a = featurize(&seq("KWLEMALKKG"), &cfg);
        let b = featurize(&seq("KWLEMALKKG"), &cfg);
        let bits = |f: &RawFeatures| f.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
