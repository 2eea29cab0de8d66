use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Components whose variance share falls below this are flagged degenerate.
const DEGENERATE_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaProjection {
    /// `n_components × n`, orthonormal rows.
    pub components: Matrix,
    pub singular_values: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub column_means: Vec<f64>,
    /// `m × n_components`.
    pub scores: Matrix,
}

impl PcaProjection {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn cumulative_ratio(&self) -> f64 {
        self.explained_variance_ratio.iter().sum()
    }

    pub fn transform(&self, data: &Matrix) -> Matrix {
        let nc = self.n_components();
        let mut out = Matrix::zeros(data.rows(), nc);
        for i in 0..data.rows() {
            let row = data.row(i);
            for c in 0..nc {
                let s = row
                    .iter()
                    .zip(&self.column_means)
                    .zip(self.components.row(c))
                    .map(|((x, mu), v)| (x - mu) * v)
                    .sum();
                out.set(i, c, s);
            }
        }
        out
    }

    pub fn reconstruct(&self, scores: &Matrix) -> Matrix {
        let n = self.column_means.len();
        let mut out = Matrix::zeros(scores.rows(), n);
        for i in 0..scores.rows() {
            let dst = out.row_mut(i);
            dst.copy_from_slice(&self.column_means);
            for (c, s) in scores.row(i).iter().enumerate() {
                for (d, v) in dst.iter_mut().zip(self.components.row(c)) {
                    *d += s * v;
                }
            }
        }
        out
    }
}

/// Principal components of `data` via the SVD of its column-centered copy.
/// Each component is signed so that its largest-magnitude loading is
/// positive.
pub fn pca_fit(data: &Matrix, n_components: usize) -> Result<PcaProjection> {
    let (m, n) = (data.rows(), data.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("PCA needs a non-empty matrix".into()));
    }
    if n_components == 0 || n_components > m.min(n) {
        return Err(Error::InvalidInput(format!(
            "n_components = {n_components} must lie in 1..={}",
            m.min(n)
        )));
    }
    let column_means: Vec<f64> = (0..n)
        .map(|j| crate::stats::mean(&data.column(j)))
        .collect();
    let centered = DMatrix::from_fn(m, n, |i, j| data.get(i, j) - column_means[j]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD did not produce right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let mut components = Matrix::zeros(n_components, n);
    let mut singular_values = Vec::with_capacity(n_components);
    let mut ratios = Vec::with_capacity(n_components);
    let mut degenerate = Vec::with_capacity(n_components);
    for (c, &src) in order.iter().take(n_components).enumerate() {
        let row: Vec<f64> = v_t.row(src).iter().copied().collect();
        let pivot = row.iter().copied().fold(
            0.0f64,
            |best, x| if x.abs() > best.abs() { x } else { best },
        );
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (j, x) in row.into_iter().enumerate() {
            components.set(c, j, sign * x);
        }
        let s = svd.singular_values[src];
        let ratio = if total > 0.0 { s * s / total } else { 0.0 };
        singular_values.push(s);
        ratios.push(ratio);
        degenerate.push(ratio <= DEGENERATE_RATIO);
    }

    let mut pca = PcaProjection {
        components,
        singular_values,
        explained_variance_ratio: ratios,
        degenerate,
        column_means,
        scores: Matrix::zeros(0, n_components),
    };
    pca.scores = pca.transform(data);
    Ok(pca)
}
