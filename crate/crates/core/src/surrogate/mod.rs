//! Probabilistic regressors over embedding vectors.
//!
//! Two model families share one interface: a deep ensemble of small ReLU
//! networks (uncertainty from member disagreement) and a single network with
//! a Normal-Inverse-Gamma head. Inputs and targets are standardized inside
//! the model; predictions come back in the original target units.

mod evidential;
mod network;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use evidential::nig_moments;
use evidential::{evidential_loss, nig_params};
use network::{Mlp, TrainOptions};

use crate::embed::EmbeddingVector;

/// On-disk format version for [`SurrogateModel::save`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("surrogate needs at least 4 data points, got {0}")]
    TooFewPoints(usize),
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid surrogate config: {0}")]
    InvalidConfig(String),
    #[error("training data contains non-finite values")]
    NonFinite,
    #[error("holdout needs at least 2 points with non-constant targets")]
    ConstantTargets,
    #[error("cannot read or write model: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    #[default]
    DeepEnsemble,
    Evidential,
}

mod defaults {
    pub fn hidden_sizes() -> Vec<usize> {
        vec![64, 64]
    }
    pub fn ensemble_size() -> usize {
        5
    }
    pub fn epochs() -> usize {
        200
    }
    pub fn learning_rate() -> f64 {
        1e-3
    }
    pub fn validation_fraction() -> f64 {
        0.2
    }
    pub fn batch_size() -> usize {
        32
    }
    pub fn weight_decay() -> f64 {
        0.0
    }

    pub fn evidential_lambda() -> f64 {
        0.01
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateConfig {
    #[serde(default)]
    pub kind: SurrogateKind,
    #[serde(default = "defaults::hidden_sizes")]
    pub hidden_sizes: Vec<usize>,
    #[serde(default = "defaults::ensemble_size")]
    pub ensemble_size: usize,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::validation_fraction")]
    pub validation_fraction: f64,
    /// Mixed into the random stream handed to [`fit_surrogate`].
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    /// Decoupled weight decay per optimizer step.
    #[serde(default = "defaults::weight_decay")]
    pub weight_decay: f64,
    /// Weight of the evidence regularizer (evidential kind only).
    #[serde(default = "defaults::evidential_lambda")]
    pub evidential_lambda: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            kind: SurrogateKind::DeepEnsemble,
            hidden_sizes: defaults::hidden_sizes(),
            ensemble_size: defaults::ensemble_size(),
            epochs: defaults::epochs(),
            learning_rate: defaults::learning_rate(),
            validation_fraction: defaults::validation_fraction(),
            seed: 0,
            batch_size: defaults::batch_size(),
            weight_decay: defaults::weight_decay(),
            evidential_lambda: defaults::evidential_lambda(),
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        let bad = |msg: String| Err(SurrogateError::InvalidConfig(msg));
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!("validation_fraction must lie in (0, 1), got {}", self.validation_fraction));
        }
        if self.kind == SurrogateKind::DeepEnsemble && self.ensemble_size < 2 {
            return bad(format!("ensemble_size must be >= 2, got {}", self.ensemble_size));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden_sizes entries must be >= 1".into());
        }
        if !(self.evidential_lambda >= 0.0 && self.evidential_lambda.is_finite()) {
            return bad(format!("evidential_lambda must be non-negative, got {}", self.evidential_lambda));
        }
        Ok(())
    }

    fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            weight_decay: self.weight_decay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorPrediction {
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of ensemble member outputs.
///
/// Outputs are sorted first so the result does not depend on member order.
pub fn aggregate_ensemble(outputs: &[f64]) -> PosteriorPrediction {
    let mut sorted = outputs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    PosteriorPrediction { mean, std: var.sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> Self {
        let n = rows.clone().count() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows.clone() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Body {
    Constant { value: f64 },
    Ensemble { members: Vec<Mlp> },
    Evidential { net: Mlp },
}

/// A fitted, immutable surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    kind: SurrogateKind,
    input_dim: usize,
    train_size: usize,
    validation_r2: Option<f64>,
    degenerate: bool,
    x_std: Standardizer,
    y_mean: f64,
    y_scale: f64,
    body: Body,
    loss_history: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    model: SurrogateModel,
}

impl SurrogateModel {
    pub fn kind(&self) -> SurrogateKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Points used for gradient training (excludes the validation split).
    pub fn train_size(&self) -> usize {
        self.train_size
    }

    /// R² on the internal validation split; `None` when it could not be computed
    /// (degenerate targets, or a constant-valued holdout).
    pub fn validation_r2(&self) -> Option<f64> {
        self.validation_r2
    }

    /// True when every training target was identical and the model is a constant.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Mean training loss per epoch, one series per trained network.
    pub fn loss_history(&self) -> &[Vec<f64>] {
        &self.loss_history
    }

    fn check_dim(&self, z: &[f64]) -> Result<(), SurrogateError> {
        if z.len() != self.input_dim {
            return Err(SurrogateError::DimensionMismatch { expected: self.input_dim, found: z.len() });
        }
        Ok(())
    }

    /// Raw outputs of each ensemble member in target units.
    pub fn member_predictions(&self, z: &EmbeddingVector) -> Result<Vec<f64>, SurrogateError> {
        self.check_dim(&z.0)?;
        let x = self.x_std.apply(&z.0);
        Ok(match &self.body {
            Body::Constant { value } => vec![*value],
            Body::Ensemble { members } => {
                members.iter().map(|m| m.forward(&x)[0] * self.y_scale + self.y_mean).collect()
            }
            Body::Evidential { net } => vec![net.forward(&x)[0] * self.y_scale + self.y_mean],
        })
    }

    pub fn predict(&self, z: &EmbeddingVector) -> Result<PosteriorPrediction, SurrogateError> {
        self.check_dim(&z.0)?;
        let x = self.x_std.apply(&z.0);
        Ok(match &self.body {
            Body::Constant { value } => PosteriorPrediction { mean: *value, std: 0.0 },
            Body::Ensemble { members } => {
                let outputs: Vec<f64> = members.iter().map(|m| m.forward(&x)[0]).collect();
                let p = aggregate_ensemble(&outputs);
                PosteriorPrediction { mean: p.mean * self.y_scale + self.y_mean, std: p.std * self.y_scale }
            }
            Body::Evidential { net } => {
                let (gamma, nu, alpha, beta) = nig_params(&net.forward(&x));
                let p = nig_moments(gamma, nu, alpha, beta);
                PosteriorPrediction { mean: p.mean * self.y_scale + self.y_mean, std: p.std * self.y_scale }
            }
        })
    }

    pub fn predict_batch(&self, zs: &[EmbeddingVector]) -> Result<Vec<PosteriorPrediction>, SurrogateError> {
        zs.iter().map(|z| self.predict(z)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), SurrogateError> {
        let envelope = Envelope { format_version: MODEL_FORMAT_VERSION, model: self.clone() };
        let text = serde_json::to_string(&envelope).map_err(|e| SurrogateError::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SurrogateError> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| SurrogateError::Format(e.to_string()))?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(SurrogateError::Format(format!(
                "unsupported format_version {version:?}, expected {MODEL_FORMAT_VERSION}"
            )));
        }
        let envelope: Envelope = serde_json::from_value(value).map_err(|e| SurrogateError::Format(e.to_string()))?;
        Ok(envelope.model)
    }

    #[cfg(test)]
    fn reverse_members(&mut self) {
        if let Body::Ensemble { members } = &mut self.body {
            members.reverse();
        }
    }
}

/// `1 - SS_res / SS_tot` of `predicted` against `actual`.
pub fn r_squared(predicted: &[f64], actual: &[f64]) -> Result<f64, SurrogateError> {
    if actual.len() < 2 || predicted.len() != actual.len() {
        return Err(SurrogateError::ConstantTargets);
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot <= 0.0 {
        return Err(SurrogateError::ConstantTargets);
    }
    let ss_res: f64 = predicted.iter().zip(actual).map(|(p, y)| (y - p) * (y - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// R² of the model's predictive means on a holdout set.
pub fn validation_r2(model: &SurrogateModel, holdout: &[(EmbeddingVector, f64)]) -> Result<f64, SurrogateError> {
    let predicted = holdout.iter().map(|(z, _)| model.predict(z).map(|p| p.mean)).collect::<Result<Vec<_>, _>>()?;
    let actual: Vec<f64> = holdout.iter().map(|(_, y)| *y).collect();
    r_squared(&predicted, &actual)
}

/// Trains a surrogate on `(embedding, score)` pairs.
///
/// A `validation_fraction` share of the points is held out (at least one,
/// leaving at least three for training) and scored for `validation_r2`.
/// Identical targets yield a flagged constant model instead of an error.
pub fn fit_surrogate<R: Rng + ?Sized>(
    data: &[(EmbeddingVector, f64)],
    config: &SurrogateConfig,
    rng: &mut R,
) -> Result<SurrogateModel, SurrogateError> {
    config.validate()?;
    let n = data.len();
    if n < 4 {
        return Err(SurrogateError::TooFewPoints(n));
    }
    let dim = data[0].0.dim();
    for (z, y) in data {
        if z.dim() != dim {
            return Err(SurrogateError::DimensionMismatch { expected: dim, found: z.dim() });
        }
        if !y.is_finite() || z.0.iter().any(|v| !v.is_finite()) {
            return Err(SurrogateError::NonFinite);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng.gen::<u64>() ^ config.seed);

    let first = data[0].1;
    if data.iter().all(|(_, y)| *y == first) {
        log::warn!("surrogate: all {n} training targets equal {first}; using a constant predictor");
        return Ok(SurrogateModel {
            kind: config.kind,
            input_dim: dim,
            train_size: n,
            validation_r2: None,
            degenerate: true,
            x_std: Standardizer { mean: vec![0.0; dim], scale: vec![1.0; dim] },
            y_mean: first,
            y_scale: 1.0,
            body: Body::Constant { value: first },
            loss_history: Vec::new(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 3);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();

    let x_std = Standardizer::fit(train_idx.iter().map(|&i| data[i].0.as_slice()), dim);
    let train_y: Vec<f64> = train_idx.iter().map(|&i| data[i].1).collect();
    let y_mean = train_y.iter().sum::<f64>() / train_y.len() as f64;
    let y_sd = (train_y.iter().map(|y| (y - y_mean) * (y - y_mean)).sum::<f64>() / train_y.len() as f64).sqrt();
    let y_scale = if y_sd > 1e-12 { y_sd } else { 1.0 };

    let xs: Vec<Vec<f64>> = train_idx.iter().map(|&i| x_std.apply(data[i].0.as_slice())).collect();
    let ys: Vec<f64> = train_y.iter().map(|y| (y - y_mean) / y_scale).collect();
    let opts = config.train_options();
    let m = xs.len();

    let (body, loss_history) = match config.kind {
        SurrogateKind::DeepEnsemble => {
            let mut members = Vec::with_capacity(config.ensemble_size);
            let mut histories = Vec::with_capacity(config.ensemble_size);
            for _ in 0..config.ensemble_size {
                let mut member_rng = ChaCha8Rng::seed_from_u64(rng.gen());
                let mut net = Mlp::new(dim, &config.hidden_sizes, 1, &mut member_rng);
                let bootstrap: Vec<usize> = (0..m).map(|_| member_rng.gen_range(0..m)).collect();
                let history = net.train(&xs, &ys, &bootstrap, &opts, &mut member_rng, |out, y| {
                    let e = out[0] - y;
                    (e * e, vec![2.0 * e])
                });
                members.push(net);
                histories.push(history);
            }
            (Body::Ensemble { members }, histories)
        }
        SurrogateKind::Evidential => {
            let mut net_rng = ChaCha8Rng::seed_from_u64(rng.gen());
            let mut net = Mlp::new(dim, &config.hidden_sizes, 4, &mut net_rng);
            let all: Vec<usize> = (0..m).collect();
            let lambda = config.evidential_lambda;
            let history = net.train(&xs, &ys, &all, &opts, &mut net_rng, |out, y| evidential_loss(out, y, lambda));
            (Body::Evidential { net }, vec![history])
        }
    };

    let mut model = SurrogateModel {
        kind: config.kind,
        input_dim: dim,
        train_size: m,
        validation_r2: None,
        degenerate: false,
        x_std,
        y_mean,
        y_scale,
        body,
        loss_history,
    };
    let holdout: Vec<(EmbeddingVector, f64)> = val_idx.iter().map(|&i| data[i].clone()).collect();
    model.validation_r2 = validation_r2(&model, &holdout).ok();
    Ok(model)
}
