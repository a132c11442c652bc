use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of canonical amino acids.
pub const ALPHABET_SIZE: usize = 20;

/// The canonical amino-acid alphabet in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet;

const RESIDUES: [u8; ALPHABET_SIZE] = *b"ACDEFGHIKLMNPQRSTVWY";

const INDEX: [i8; 256] = {
    let mut table = [-1i8; 256];
    let mut i = 0;
    while i < ALPHABET_SIZE {
        table[RESIDUES[i] as usize] = i as i8;
        i += 1;
    }
    table
};

impl Alphabet {
    pub const fn residues() -> &'static [u8; ALPHABET_SIZE] {
        &RESIDUES
    }

    /// Index of an uppercase residue letter, if it belongs to the alphabet.
    #[inline]
    pub fn index_of(residue: u8) -> Option<usize> {
        let idx = INDEX[residue as usize];
        (idx >= 0).then_some(idx as usize)
    }

    #[inline]
    pub fn residue(index: usize) -> u8 {
        RESIDUES[index]
    }

    pub fn contains(residue: u8) -> bool {
        Self::index_of(residue).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("invalid residue {1:?} at position {0}")]
    InvalidResidue(usize, char),
}

/// A non-empty peptide over the canonical alphabet, stored uppercase.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Sequence(String);

impl Sequence {
    /// Validates and uppercases `text`.
    pub fn parse(text: &str) -> Result<Self, SequenceError> {
        if text.is_empty() {
            return Err(SequenceError::EmptySequence);
        }
        let mut out = String::with_capacity(text.len());
        for (pos, ch) in text.chars().enumerate() {
            let upper = ch.to_ascii_uppercase();
            if !upper.is_ascii() || !Alphabet::contains(upper as u8) {
                return Err(SequenceError::InvalidResidue(pos, ch));
            }
            out.push(upper);
        }
        Ok(Sequence(out))
    }

    /// Builds a sequence from residue bytes already known to be valid.
    pub(crate) fn from_valid_bytes(bytes: Vec<u8>) -> Self {
        debug_assert!(!bytes.is_empty());
        debug_assert!(bytes.iter().all(|&b| Alphabet::contains(b)));
        Sequence(String::from_utf8(bytes).expect("alphabet is ASCII"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Alphabet indices of the residues, in order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.bytes().map(|b| Alphabet::index_of(b).expect("validated at construction"))
    }
}

/// Convenience for `Sequence::parse`.
pub fn parse_sequence(text: &str) -> Result<Sequence, SequenceError> {
    Sequence::parse(text)
}

impl TryFrom<String> for Sequence {
    type Error = SequenceError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Sequence::parse(&value)
    }
}

impl From<Sequence> for String {
    fn from(value: Sequence) -> Self {
        value.0
    }
}

impl std::str::FromStr for Sequence {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sequence::parse(s)
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sequence({:?})", self.0)
    }
}

impl AsRef<str> for Sequence {
    fn as_ref(&self) -> &str {
        &self.0
    }
}
