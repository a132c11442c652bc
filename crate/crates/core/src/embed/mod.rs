//! Sequence embeddings: a physicochemical featurizer or a precomputed table,
//! optionally followed by a PCA projection that is frozen once fitted.

mod features;
mod pca;
mod table;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{featurize, FeatureConfig, RawFeatures};
pub use pca::{fit_pca, PcaError, PcaModel};
pub use table::{
    load_embedding_table, load_embedding_table_with_dim, parse_embedding_table, EmbeddingTable, TableError,
};

use crate::seqcore::Sequence;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("sequence {0} is missing from the embedding table")]
    TableMiss(Sequence),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// A post-projection embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Projects raw features through a fitted PCA model.
pub fn project(model: &PcaModel, raw: &RawFeatures) -> Result<EmbeddingVector, PcaError> {
    model.project(&raw.values).map(EmbeddingVector)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    #[default]
    Physchem,
    Table,
}

fn default_pca_components() -> Option<usize> {
    Some(20)
}

/// Embedding section of a campaign configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    #[serde(default)]
    pub encoder: EncoderKind,
    #[serde(default)]
    pub dipeptide: bool,
    #[serde(default)]
    pub table_path: Option<PathBuf>,
    /// PCA output width; absent means raw features go straight to the surrogate.
    #[serde(default = "default_pca_components")]
    pub pca_components: Option<usize>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Physchem,
            dipeptide: false,
            table_path: None,
            pca_components: default_pca_components(),
        }
    }
}

/// Source of raw feature vectors.
#[derive(Debug, Clone)]
pub enum Encoder {
    Physchem(FeatureConfig),
    Table(Arc<EmbeddingTable>),
}

impl Encoder {
    pub fn from_config(config: &EmbeddingConfig) -> Result<Self, EmbedError> {
        match config.encoder {
            EncoderKind::Physchem => Ok(Encoder::Physchem(FeatureConfig { dipeptide: config.dipeptide })),
            EncoderKind::Table => {
                let path = config.table_path.as_ref().ok_or_else(|| {
                    TableError::Io(std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "encoder = \"table\" requires table_path",
                    ))
                })?;
                Ok(Encoder::Table(Arc::new(load_embedding_table(path)?)))
            }
        }
    }

    pub fn raw_dim(&self) -> usize {
        match self {
            Encoder::Physchem(cfg) => cfg.dimension(),
            Encoder::Table(t) => t.dimension(),
        }
    }

    /// Raw features; a table miss is an error, never a silent fallback.
    pub fn raw(&self, seq: &Sequence) -> Result<RawFeatures, EmbedError> {
        match self {
            Encoder::Physchem(cfg) => Ok(featurize(seq, cfg)),
            Encoder::Table(t) => t
                .get(seq)
                .map(|v| RawFeatures::from_values(v.to_vec()))
                .ok_or_else(|| EmbedError::TableMiss(seq.clone())),
        }
    }
}

/// Encoder plus an optional frozen PCA projection.
#[derive(Debug, Clone)]
pub struct Embedder {
    encoder: Encoder,
    pca: Option<PcaModel>,
}

impl Embedder {
    pub fn new(encoder: Encoder, pca: Option<PcaModel>) -> Self {
        Self { encoder, pca }
    }

    /// Fits the projection on `seqs` (when `n_components` is set) and freezes it.
    pub fn fit(encoder: Encoder, seqs: &[Sequence], n_components: Option<usize>) -> Result<Self, EmbedError> {
        let pca = match n_components {
            Some(k) => {
                let rows = seqs.iter().map(|s| encoder.raw(s).map(|f| f.values)).collect::<Result<Vec<_>, _>>()?;
                Some(fit_pca(&rows, k)?)
            }
            None => None,
        };
        Ok(Self { encoder, pca })
    }

    pub fn pca(&self) -> Option<&PcaModel> {
        self.pca.as_ref()
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn output_dim(&self) -> usize {
        self.pca.as_ref().map(PcaModel::n_components).unwrap_or_else(|| self.encoder.raw_dim())
    }

    pub fn embed(&self, seq: &Sequence) -> Result<EmbeddingVector, EmbedError> {
        let raw = self.encoder.raw(seq)?;
        match &self.pca {
            Some(model) => Ok(project(model, &raw)?),
            None => Ok(EmbeddingVector(raw.values)),
        }
    }
}
