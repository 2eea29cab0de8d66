//! Lloyd's algorithm with k-means++ seeding.
//!
//! The assignment step runs in parallel by point; every reduction (centroid
//! sums, objective) is a sequential pass in row order, so results are
//! bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Convergence threshold on the largest centroid displacement.
    pub tol: f64,
    /// Independent k-means++ starts; the lowest-WCSS fit is kept.
    #[serde(default = "one")]
    pub restarts: usize,
}

fn one() -> usize {
    1
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            max_iter: 300,
            tol: 1e-6,
            restarts: 1,
        }
    }
}

/// Seed of the r-th restart; the first restart uses the seed itself.
pub fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Matrix,
    pub assignments: Vec<usize>,
    pub wcss: f64,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
}

/// Nearest centroid and squared distance for one point; ties go to the lower
/// index.
#[inline]
fn nearest(x: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, row) in centroids.iter_rows().enumerate() {
        let d = squared_distance(x, row);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub fn assign_nearest(data: &Matrix, centroids: &Matrix) -> Vec<(usize, f64)> {
    (0..data.rows())
        .into_par_iter()
        .map(|i| nearest(data.row(i), centroids))
        .collect()
}

/// k-means++ seeding: the first center uniformly, each further center with
/// probability proportional to its squared distance from the chosen set.
pub fn kmeans_plus_plus(data: &Matrix, k: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let m = data.rows();
    let mut chosen = vec![rng.random_range(0..m)];
    let mut d2: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| squared_distance(data.row(i), data.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = m - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining points coincide with a chosen center.
            (0..m).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        let c = data.row(next).to_vec();
        d2.par_iter_mut().enumerate().for_each(|(i, d)| {
            let nd = squared_distance(data.row(i), &c);
            if nd < *d {
                *d = nd;
            }
        });
    }
    data.select_rows(&chosen)
}

/// Gives every empty cluster the point farthest from its current center,
/// taken from clusters that keep at least one member.
fn repair_empty(
    data: &Matrix,
    centroids: &mut Matrix,
    labels: &mut [(usize, f64)],
    k: usize,
) -> usize {
    let mut counts = vec![0usize; k];
    for &(c, _) in labels.iter() {
        counts[c] += 1;
    }
    let mut repaired = 0;
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, &(ci, d)) in labels.iter().enumerate() {
            if counts[ci] > 1 && far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let Some((p, _)) = far else { break };
        counts[labels[p].0] -= 1;
        counts[c] += 1;
        labels[p] = (c, 0.0);
        centroids.row_mut(c).copy_from_slice(data.row(p));
        repaired += 1;
    }
    repaired
}

fn update_centroids(data: &Matrix, labels: &[(usize, f64)], previous: &Matrix) -> Matrix {
    let (k, n) = (previous.rows(), previous.cols());
    let mut sums = Matrix::zeros(k, n);
    let mut counts = vec![0usize; k];
    for (i, &(c, _)) in labels.iter().enumerate() {
        counts[c] += 1;
        for (s, x) in sums.row_mut(c).iter_mut().zip(data.row(i)) {
            *s += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            sums.row_mut(c).copy_from_slice(previous.row(c));
        } else {
            for s in sums.row_mut(c) {
                *s /= count as f64;
            }
        }
    }
    sums
}

fn objective(labels: &[(usize, f64)]) -> f64 {
    labels.iter().map(|&(_, d)| d).sum()
}

fn validate(data: &Matrix, k: usize) -> Result<()> {
    if k < 1 || k > data.rows() {
        return Err(Error::InvalidK { k, m: data.rows() });
    }
    Ok(())
}

/// Lloyd iterations from the given centers. Returns the model and the
/// objective after every assignment step.
fn lloyd(
    data: &Matrix,
    mut centroids: Matrix,
    seed: u64,
    params: KMeansParams,
) -> (KMeansModel, Vec<f64>) {
    let k = centroids.rows();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut labels = assign_nearest(data, &centroids);
    repair_empty(data, &mut centroids, &mut labels, k);
    trace.push(objective(&labels));
    while iterations < params.max_iter {
        let updated = update_centroids(data, &labels, &centroids);
        let shift = (0..k)
            .map(|c| squared_distance(updated.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        iterations += 1;
        labels = assign_nearest(data, &centroids);
        repair_empty(data, &mut centroids, &mut labels, k);
        trace.push(objective(&labels));
        if shift < params.tol {
            converged = true;
            break;
        }
    }
    let model = KMeansModel {
        k,
        wcss: objective(&labels),
        assignments: labels.into_iter().map(|(c, _)| c).collect(),
        centroids,
        iterations,
        seed,
        converged,
    };
    (model, trace)
}

pub fn kmeans_fit_traced(
    data: &Matrix,
    k: usize,
    seed: u64,
    params: KMeansParams,
) -> Result<(KMeansModel, Vec<f64>)> {
    validate(data, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = kmeans_plus_plus(data, k, &mut rng);
    Ok(lloyd(data, init, seed, params))
}

pub fn kmeans_fit(data: &Matrix, k: usize, seed: u64, params: KMeansParams) -> Result<KMeansModel> {
    let mut best = kmeans_fit_traced(data, k, seed, params)?.0;
    for r in 1..params.restarts {
        let m = kmeans_fit_traced(data, k, restart_seed(seed, r), params)?.0;
        if m.wcss < best.wcss {
            best = m;
        }
    }
    best.seed = seed;
    Ok(best)
}

/// Lloyd iterations from caller-supplied initial centers.
pub fn kmeans_fit_from(
    data: &Matrix,
    init: Matrix,
    seed: u64,
    params: KMeansParams,
) -> Result<KMeansModel> {
    validate(data, init.rows())?;
    if init.cols() != data.cols() {
        return Err(Error::InvalidInput("centroid dimension mismatch".into()));
    }
    Ok(lloyd(data, init, seed, params).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::wcss;

    fn grid(m: usize, n: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(m, n, (0..m * n).map(|_| rng.random::<f64>()).collect())
    }

    #[test]
    fn k_one_is_column_means() {
        let raw = grid(50, 3, 1);
        let fm = crate::features::FeatureMatrix {
            wallets: (0..50).map(|i| i.to_string()).collect(),
            feature_names: vec![
                "in_degree".into(),
                "out_degree".into(),
                "unique_in_ratio".into(),
            ],
            values: raw,
            standardized: false,
            column_means: None,
            column_sds: None,
        };
        let z = crate::features::standardize(&fm).values;
        let model = kmeans_fit(&z, 1, 7, KMeansParams::default()).unwrap();
        for v in model.centroids.row(0) {
            assert!(v.abs() < 1e-12);
        }
        assert!((model.wcss - 150.0).abs() < 1e-9);
    }

    #[test]
    fn k_equals_m_has_zero_wcss() {
        let data = grid(12, 2, 2);
        let model = kmeans_fit(&data, 12, 3, KMeansParams::default()).unwrap();
        assert_eq!(model.wcss, 0.0);
        let mut seen = model.assignments.clone();
        seen.sort();
        assert_eq!(seen, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_k() {
        let data = grid(5, 2, 2);
        assert!(matches!(
            kmeans_fit(&data, 0, 1, KMeansParams::default()),
            Err(Error::InvalidK { .. })
        ));
        assert!(matches!(
            kmeans_fit(&data, 6, 1, KMeansParams::default()),
            Err(Error::InvalidK { .. })
        ));
    }

    #[test]
    fn wcss_matches_recomputation_and_clusters_nonempty() {
        let data = grid(300, 4, 9);
        for k in [2, 5, 9] {
            let model = kmeans_fit(&data, k, k as u64, KMeansParams::default()).unwrap();
            let again = wcss(&data, &model.centroids, &model.assignments).unwrap();
            assert!((model.wcss - again).abs() <= 1e-6 * again.max(1.0));
            for c in 0..k {
                assert!(model.assignments.contains(&c));
            }
        }
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let data = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [5.0, 5.0]]);
        let model = kmeans_fit(&data, 3, 0, KMeansParams::default()).unwrap();
        for c in 0..3 {
            assert!(model.assignments.contains(&c));
        }
    }

    #[test]
    fn lloyd_objective_never_increases() {
        for seed in 0..20 {
            let data = grid(120, 3, 100 + seed);
            let (_, trace) = kmeans_fit_traced(&data, 4, seed, KMeansParams::default()).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{trace:?}");
            }
        }
    }
}
