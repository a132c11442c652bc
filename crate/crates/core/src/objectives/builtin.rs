//! Cheap sequence-level objectives.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seqcore::{Alphabet, Sequence, ALPHABET_SIZE};

/// Helical wheel angle between consecutive residues, in degrees.
pub const HELIX_ANGLE_DEG: f64 = 100.0;

/// Mass of the terminal water added to the residue sum.
pub const WATER_MASS: f64 = 18.01528;

const EISENBERG_CSV: &str = include_str!("../../data/eisenberg.csv");
const RESIDUE_MASS_CSV: &str = include_str!("../../data/residue_masses.csv");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("scale value for {0} is not finite")]
    NonFinite(char),
    #[error("residue table: {0}")]
    Table(String),
}

/// Parses a `residue,value` table covering all 20 residues.
pub fn parse_residue_table(text: &str) -> Result<[f64; ALPHABET_SIZE], ScaleError> {
    let mut values = [f64::NAN; ALPHABET_SIZE];
    let mut seen = [false; ALPHABET_SIZE];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("residue") {
            continue;
        }
        let (res, val) = line
            .split_once(',')
            .ok_or_else(|| ScaleError::Table(format!("line {}: expected residue,value", lineno + 1)))?;
        let res = res.trim().as_bytes();
        let idx = match res {
            [b] => Alphabet::index_of(*b),
            _ => None,
        }
        .ok_or_else(|| ScaleError::Table(format!("line {}: unknown residue", lineno + 1)))?;
        let value: f64 =
            val.trim().parse().map_err(|_| ScaleError::Table(format!("line {}: bad number {val:?}", lineno + 1)))?;
        if seen[idx] {
            return Err(ScaleError::Table(format!("line {}: duplicate residue", lineno + 1)));
        }
        seen[idx] = true;
        values[idx] = value;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(ScaleError::Table(format!("missing residue {}", Alphabet::residue(missing) as char)));
    }
    Ok(values)
}

/// Per-residue hydrophobicity values indexed by alphabet position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrophobicityScale {
    values: [f64; ALPHABET_SIZE],
}

impl HydrophobicityScale {
    pub fn new(values: [f64; ALPHABET_SIZE]) -> Result<Self, ScaleError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ScaleError::NonFinite(Alphabet::residue(i) as char));
        }
        Ok(Self { values })
    }

    /// Eisenberg consensus scale.
    pub fn eisenberg() -> &'static HydrophobicityScale {
        static SCALE: OnceLock<HydrophobicityScale> = OnceLock::new();
        SCALE.get_or_init(|| {
            let values = parse_residue_table(EISENBERG_CSV).expect("bundled scale is valid");
            HydrophobicityScale::new(values).expect("bundled scale is finite")
        })
    }

    #[inline]
    pub fn value(&self, residue_index: usize) -> f64 {
        self.values[residue_index]
    }

    pub fn values(&self) -> &[f64; ALPHABET_SIZE] {
        &self.values
    }

    pub fn most_hydrophobic(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn most_hydrophilic(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn residue_masses() -> &'static [f64; ALPHABET_SIZE] {
    static MASSES: OnceLock<[f64; ALPHABET_SIZE]> = OnceLock::new();
    MASSES.get_or_init(|| parse_residue_table(RESIDUE_MASS_CSV).expect("bundled mass table is valid"))
}

/// Fraction of residues in {E, M, A, L}.
pub fn beta_sheet_fraction(seq: &Sequence) -> f64 {
    let hits = seq.as_bytes().iter().filter(|b| matches!(b, b'E' | b'M' | b'A' | b'L')).count();
    hits as f64 / seq.len() as f64
}

/// Average molecular weight in daltons.
pub fn molecular_weight(seq: &Sequence) -> f64 {
    let masses = residue_masses();
    seq.indices().map(|i| masses[i]).sum::<f64>() + WATER_MASS
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HydrophobicMoment {
    /// Mean hydrophobic moment `|sum_n H_n e^{i n delta}| / L`.
    pub mu_h: f64,
    /// `mu_h` relative to the ideal moment for the same length, in [0, 1].
    pub u_h_rel: f64,
}

fn moment_of<I: Iterator<Item = f64>>(values: I, angle_deg: f64, offset: usize) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    let mut len = 0usize;
    for (n, h) in values.enumerate() {
        let theta = ((n + offset) as f64 * angle_deg).to_radians();
        re += h * theta.cos();
        im += h * theta.sin();
        len += 1;
    }
    (re * re + im * im).sqrt() / len as f64
}

/// Mean hydrophobic moment with residue positions counted from `offset`.
pub fn mean_moment_with_offset(seq: &Sequence, scale: &HydrophobicityScale, angle_deg: f64, offset: usize) -> f64 {
    moment_of(seq.indices().map(|i| scale.value(i)), angle_deg, offset)
}

/// Largest mean moment a length-`len` peptide can reach on `scale`.
///
/// For each moment axis on a 1 degree grid, positions projecting positively
/// onto the axis get the most hydrophobic value and the rest the most
/// hydrophilic one; the best axis wins.
pub fn ideal_moment(len: usize, scale: &HydrophobicityScale, angle_deg: f64) -> f64 {
    let hi = scale.most_hydrophobic();
    let lo = scale.most_hydrophilic();
    let angles: Vec<f64> = (0..len).map(|n| (n as f64 * angle_deg).to_radians()).collect();
    (0..360)
        .map(|axis_deg| {
            let axis = (axis_deg as f64).to_radians();
            let values = angles.iter().map(|&a| if (a - axis).cos() > 1e-12 { hi } else { lo });
            moment_of(values, angle_deg, 0)
        })
        .fold(0.0, f64::max)
}

pub fn hydrophobic_moment(seq: &Sequence, scale: &HydrophobicityScale, angle_deg: f64) -> HydrophobicMoment {
    let mu_h = mean_moment_with_offset(seq, scale, angle_deg, 0);
    let ideal = ideal_moment(seq.len(), scale, angle_deg);
    let u_h_rel = if ideal > 0.0 { (mu_h / ideal).clamp(0.0, 1.0) } else { 0.0 };
    HydrophobicMoment { mu_h, u_h_rel }
}

/// Normalized hydrophobic moment on the Eisenberg scale at 100 degrees.
pub fn u_h_rel(seq: &Sequence) -> f64 {
    hydrophobic_moment(seq, HydrophobicityScale::eisenberg(), HELIX_ANGLE_DEG).u_h_rel
}

/// The built-in objective landscapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Landscape {
    /// Beta-sheet propensity proxy.
    Sheet,
    /// Normalized hydrophobic moment.
    Moment,
    /// Molecular weight.
    Mw,
    /// Sequence length; handy for protocol tests.
    Length,
}

impl Landscape {
    pub fn evaluate(self, seq: &Sequence) -> f64 {
        match self {
            Landscape::Sheet => beta_sheet_fraction(seq),
            Landscape::Moment => u_h_rel(seq),
            Landscape::Mw => molecular_weight(seq),
            Landscape::Length => seq.len() as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Landscape::Sheet => "sheet",
            Landscape::Moment => "moment",
            Landscape::Mw => "mw",
            Landscape::Length => "length",
        }
    }
}

impl std::str::FromStr for Landscape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sheet" => Ok(Landscape::Sheet),
            "moment" => Ok(Landscape::Moment),
            "mw" => Ok(Landscape::Mw),
            "length" => Ok(Landscape::Length),
            other => Err(format!("unknown landscape {other:?}")),
        }
    }
}
