use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::kmeans::{assign_nearest, kmeans_fit, kmeans_fit_from, KMeansModel, KMeansParams};
use super::knee::elbow_knee;
use super::validity::{davies_bouldin, silhouette};
use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::stats::{mean, population_sd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectParams {
    pub kmeans: KMeansParams,
    pub silhouette_subsample: usize,
}

impl Default for SelectParams {
    fn default() -> Self {
        Self {
            kmeans: KMeansParams::default(),
            silhouette_subsample: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KRow {
    pub k: usize,
    pub wcss: f64,
    pub dbi: f64,
    pub silhouette: f64,
    /// Objective of the independent k-means++ fit.
    pub fresh_wcss: f64,
    /// Objective of the fit warm-started from the previous k, if any.
    pub warm_wcss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSelectionReport {
    pub rows: Vec<KRow>,
    pub knee_k: Option<usize>,
    pub chosen_k: usize,
}

pub struct Selection {
    pub report: KSelectionReport,
    /// One fitted model per k, in sweep order.
    pub models: Vec<KMeansModel>,
}

impl Selection {
    pub fn model(&self, k: usize) -> Option<&KMeansModel> {
        self.models.iter().find(|m| m.k == k)
    }
}

fn warm_start(data: &Matrix, prev: &KMeansModel) -> Matrix {
    let mut worst = (0, -1.0);
    for i in 0..data.rows() {
        let d = squared_distance(data.row(i), prev.centroids.row(prev.assignments[i]));
        if d > worst.1 {
            worst = (i, d);
        }
    }
    let mut rows: Vec<Vec<f64>> = prev.centroids.iter_rows().map(<[f64]>::to_vec).collect();
    rows.push(data.row(worst.0).to_vec());
    Matrix::from_rows(&rows)
}

/// Fits every k in `ks` (ascending), records WCSS, DBI and silhouette, then
/// picks k from the knee, the DBI local minima and silhouette.
///
/// Each k keeps the better of a fresh k-means++ fit and a fit warm-started
/// from the previous k's centers plus its worst-fit point, so the WCSS curve
/// is non-increasing.
pub fn select_k(data: &Matrix, ks: &[usize], seed: u64, params: SelectParams) -> Result<Selection> {
    if ks.is_empty() {
        return Err(Error::Config("k range is empty".into()));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("k range must be strictly increasing".into()));
    }
    if ks[0] < 2 || ks[ks.len() - 1] > data.rows() {
        return Err(Error::InvalidK {
            k: if ks[0] < 2 { ks[0] } else { ks[ks.len() - 1] },
            m: data.rows(),
        });
    }
    let mut rows = Vec::with_capacity(ks.len());
    let mut models: Vec<KMeansModel> = Vec::with_capacity(ks.len());
    for &k in ks {
        let fresh = kmeans_fit(data, k, seed, params.kmeans)?;
        let fresh_wcss = fresh.wcss;
        let (model, warm_wcss) = match models.last() {
            Some(prev) if prev.k + 1 == k => {
                let warm = kmeans_fit_from(data, warm_start(data, prev), seed, params.kmeans)?;
                let w = warm.wcss;
                (if w < fresh.wcss { warm } else { fresh }, Some(w))
            }
            _ => (fresh, None),
        };
        let dbi = davies_bouldin(data, &model.assignments)?;
        let sil = silhouette(data, &model.assignments, params.silhouette_subsample, seed)?;
        log::info!(
            "k={k} wcss={:.4} dbi={dbi:.4} silhouette={sil:.4}",
            model.wcss
        );
        rows.push(KRow {
            k,
            wcss: model.wcss,
            dbi,
            silhouette: sil,
            fresh_wcss,
            warm_wcss,
        });
        models.push(model);
    }
    let curve: Vec<(usize, f64)> = rows.iter().map(|r| (r.k, r.wcss)).collect();
    let knee_k = if curve.len() >= 4 {
        elbow_knee(&curve)?
    } else {
        None
    };
    let chosen_k = choose_k(&rows, knee_k);
    Ok(Selection {
        report: KSelectionReport {
            rows,
            knee_k,
            chosen_k,
        },
        models,
    })
}

/// The knee when it lies within one of a local DBI minimum; otherwise the
/// silhouette-best k among the knee and its neighbours. Without a knee the
/// silhouette-best k overall.
pub fn choose_k(rows: &[KRow], knee_k: Option<usize>) -> usize {
    let best_silhouette = |cands: &[&KRow]| {
        cands
            .iter()
            .fold(None::<&KRow>, |best, r| match best {
                Some(b) if b.silhouette >= r.silhouette => Some(b),
                _ => Some(r),
            })
            .map(|r| r.k)
    };
    let Some(knee) = knee_k else {
        let all: Vec<&KRow> = rows.iter().collect();
        return best_silhouette(&all).unwrap_or(rows[0].k);
    };
    let local_minima: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            let left = i == 0 || rows[i].dbi <= rows[i - 1].dbi;
            let right = i + 1 == rows.len() || rows[i].dbi <= rows[i + 1].dbi;
            left && right
        })
        .map(|i| rows[i].k)
        .collect();
    if local_minima.iter().any(|&k| k.abs_diff(knee) <= 1) {
        return knee;
    }
    let near: Vec<&KRow> = rows.iter().filter(|r| r.k.abs_diff(knee) <= 1).collect();
    best_silhouette(&near).unwrap_or(knee)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSplit {
    pub split: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub train_sse: f64,
    pub test_sse: f64,
    pub train_sse_per_point: f64,
    pub test_sse_per_point: f64,
    pub train_dbi: f64,
    pub test_dbi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSummary {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidationReport {
    pub k: usize,
    pub splits: Vec<CvSplit>,
    pub train_sse: CvSummary,
    pub test_sse: CvSummary,
    pub train_dbi: CvSummary,
    pub test_dbi: CvSummary,
}

fn summary(xs: &[f64]) -> CvSummary {
    CvSummary {
        mean: mean(xs),
        sd: population_sd(xs),
    }
}

/// Repeated shuffle-split validation: fit on the training share, score both
/// shares, with held-out points assigned to their nearest trained centroid.
pub fn cross_validate(
    data: &Matrix,
    k: usize,
    n_splits: usize,
    train_fraction: f64,
    seed: u64,
    params: KMeansParams,
) -> Result<CrossValidationReport> {
    let m = data.rows();
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let train_size = (m as f64 * train_fraction).round() as usize;
    let test_size = m - train_size;
    if test_size < k || train_size < k {
        return Err(Error::InvalidInput(format!(
            "test split of {test_size} points is smaller than k = {k}"
        )));
    }
    let mut splits = Vec::with_capacity(n_splits);
    for split in 0..n_splits {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(split as u64 + 1);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut rng);
        let (train_idx, test_idx) = idx.split_at(train_size);
        let train = data.select_rows(train_idx);
        let test = data.select_rows(test_idx);
        let model = kmeans_fit(&train, k, seed.wrapping_add(split as u64), params)?;
        let test_assign = assign_nearest(&test, &model.centroids);
        let test_sse: f64 = test_assign.iter().map(|&(_, d)| d).sum();
        let labels: Vec<usize> = test_assign.iter().map(|&(c, _)| c).collect();
        splits.push(CvSplit {
            split,
            train_size,
            test_size,
            train_sse: model.wcss,
            test_sse,
            train_sse_per_point: model.wcss / train_size as f64,
            test_sse_per_point: test_sse / test_size as f64,
            train_dbi: davies_bouldin(&train, &model.assignments)?,
            test_dbi: davies_bouldin(&test, &compact_labels(&labels))?,
        });
    }
    let col = |f: fn(&CvSplit) -> f64| summary(&splits.iter().map(f).collect::<Vec<_>>());
    Ok(CrossValidationReport {
        k,
        train_sse: col(|s| s.train_sse),
        test_sse: col(|s| s.test_sse),
        train_dbi: col(|s| s.train_dbi),
        test_dbi: col(|s| s.test_dbi),
        splits,
    })
}

/// Renumbers labels to 0..distinct so clusters absent from a held-out
/// split do not count as empty.
fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::BTreeMap::new();
    for &l in labels {
        map.entry(l).or_insert(0);
    }
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    labels.iter().map(|l| map[l]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, dbi: f64, sil: f64) -> KRow {
        KRow {
            k,
            wcss: 0.0,
            dbi,
            silhouette: sil,
            fresh_wcss: 0.0,
            warm_wcss: None,
        }
    }

    #[test]
    fn knee_kept_near_dbi_minimum() {
        let rows = vec![
            row(6, 1.5, 0.2),
            row(7, 1.4, 0.3),
            row(8, 1.3, 0.29),
            row(9, 1.35, 0.28),
        ];
        assert_eq!(choose_k(&rows, Some(7)), 7);
    }

    #[test]
    fn silhouette_breaks_tie_away_from_dbi_minimum() {
        let rows = vec![
            row(2, 0.5, 0.1),
            row(3, 1.0, 0.2),
            row(4, 1.1, 0.25),
            row(5, 1.2, 0.4),
            row(6, 1.3, 0.3),
            row(7, 1.4, 0.5),
        ];
        assert_eq!(choose_k(&rows, Some(5)), 5);
        assert_eq!(choose_k(&rows, Some(4)), 5);
        assert_eq!(choose_k(&rows, None), 7);
    }

    #[test]
    fn compacting_labels() {
        assert_eq!(compact_labels(&[4, 1, 4, 7]), vec![1, 0, 1, 2]);
    }
}
