//! Principal component analysis via a thin SVD of the centered data.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PcaError {
    #[error("PCA needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("n_components = {requested} must lie in [1, {max}]")]
    InvalidComponents { requested: usize, max: usize },
    #[error("input matrix contains non-finite values")]
    NonFinite,
    #[error("rows have inconsistent dimension")]
    RaggedRows,
    #[error("dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A fitted projection onto the leading principal axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-major `n_components x dim`.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Numerical rank of the centered data; rows past it are zero.
    pub rank: usize,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.n_components()
    }

    /// `(raw - mean) . components^T`
    pub fn project(&self, raw: &[f64]) -> Result<Vec<f64>, PcaError> {
        if raw.len() != self.mean.len() {
            return Err(PcaError::DimensionMismatch { expected: self.mean.len(), found: raw.len() });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(raw.iter().zip(&self.mean)).map(|(w, (x, m))| w * (x - m)).sum())
            .collect())
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, projected: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (coef, comp) in projected.iter().zip(&self.components) {
            for (o, c) in out.iter_mut().zip(comp) {
                *o += coef * c;
            }
        }
        out
    }
}

/// Fits `n_components` principal axes to the rows of `rows`.
///
/// Axes are the leading right singular vectors of the centered matrix, each
/// signed so that its largest-magnitude entry is positive. When the data rank
/// is below `n_components`, the surplus axes are zero with zero variance.
pub fn fit_pca(rows: &[Vec<f64>], n_components: usize) -> Result<PcaModel, PcaError> {
    let n = rows.len();
    if n < 2 {
        return Err(PcaError::TooFewRows(n));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(PcaError::RaggedRows);
    }
    let max = (n - 1).min(dim);
    if n_components < 1 || n_components > max {
        return Err(PcaError::InvalidComponents { requested: n_components, max });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PcaError::NonFinite);
    }

    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let centered = DMatrix::from_fn(n, dim, |i, j| rows[i][j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let singular = svd.singular_values;

    let mut order: Vec<usize> = (0..singular.len()).collect();
    order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]).then(a.cmp(&b)));

    let s_max = order.first().map(|&i| singular[i]).unwrap_or(0.0);
    let tol = s_max * (n.max(dim) as f64) * f64::EPSILON;
    let rank = singular.iter().filter(|&&s| s > tol).count();

    let mut components = Vec::with_capacity(n_components);
    let mut explained_variance = Vec::with_capacity(n_components);
    for &i in order.iter().take(n_components) {
        if components.len() >= rank {
            components.push(vec![0.0; dim]);
            explained_variance.push(0.0);
            continue;
        }
        let mut row: Vec<f64> = v_t.row(i).iter().copied().collect();
        let pivot = row
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best })
            .0;
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(row);
        explained_variance.push(singular[i] * singular[i] / (n - 1) as f64);
    }

    if rank < n_components {
        log::warn!("PCA: requested {n_components} components but the data has rank {rank}; padding with zero axes");
    }

    Ok(PcaModel { mean, components, explained_variance, rank: rank.min(n_components) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_data_is_rank_one() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let model = fit_pca(&rows, 1).unwrap();
        let total: f64 = {
            let m = [4.5, 9.0];
            rows.iter().map(|r| (r[0] - m[0]).powi(2) + (r[1] - m[1]).powi(2)).sum::<f64>() / 9.0
        };
        assert!((model.explained_variance[0] - total).abs() < 1e-10 * total);
        let c = &model.components[0];
        let norm = 5f64.sqrt();
        assert!((c[0] - 1.0 / norm).abs() < 1e-12 && (c[1] - 2.0 / norm).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_pads_with_zeros() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64, 0.5]).collect();
        let model = fit_pca(&rows, 2).unwrap();
        assert_eq!(model.rank, 1);
        assert!(model.is_rank_deficient());
        assert_eq!(model.components[1], vec![0.0; 3]);
        assert_eq!(model.explained_variance[1], 0.0);
    }

    #[test]
    fn projecting_the_mean_gives_zero() {
        let rows = vec![vec![1.0, 2.0, 0.0], vec![3.0, 1.0, 1.0], vec![0.0, 0.0, 5.0]];
        let model = fit_pca(&rows, 2).unwrap();
        let z = model.project(&model.mean.clone()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
        assert!(matches!(model.project(&[1.0]), Err(PcaError::DimensionMismatch { expected: 3, found: 1 })));
    }

    #[test]
    fn full_rank_projection_reconstructs() {
        let rows = vec![vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 1.0], vec![2.0, 1.0, 0.0], vec![1.0, 1.0, 1.5]];
        let model = fit_pca(&rows, 3).unwrap();
        for r in &rows {
            let back = model.reconstruct(&model.project(r).unwrap());
            for (a, b) in back.iter().zip(r) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validates_arguments() {
        assert_eq!(fit_pca(&[vec![1.0]], 1), Err(PcaError::TooFewRows(1)));
        let rows = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(fit_pca(&rows, 2), Err(PcaError::InvalidComponents { .. })));
        assert!(matches!(fit_pca(&rows, 0), Err(PcaError::InvalidComponents { .. })));
        assert_eq!(fit_pca(&[vec![1.0], vec![f64::NAN]], 1), Err(PcaError::NonFinite));
    }
}
