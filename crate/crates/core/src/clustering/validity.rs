use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{distance, squared_distance, Matrix};

pub fn cluster_sizes(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &a in assignments {
        sizes[a] += 1;
    }
    sizes
}

fn label_count(assignments: &[usize]) -> usize {
    assignments.iter().max().map_or(0, |m| m + 1)
}

/// Within-cluster sum of squared distances to the given centers.
pub fn wcss(data: &Matrix, centroids: &Matrix, assignments: &[usize]) -> Result<f64> {
    if assignments.len() != data.rows() {
        return Err(Error::InvalidInput("assignment length mismatch".into()));
    }
    let mut total = 0.0;
    for (i, &a) in assignments.iter().enumerate() {
        if a >= centroids.rows() {
            return Err(Error::InvalidInput(format!("assignment {a} out of range")));
        }
        total += squared_distance(data.row(i), centroids.row(a));
    }
    Ok(total)
}

fn cluster_means(data: &Matrix, assignments: &[usize], k: usize) -> Result<(Matrix, Vec<usize>)> {
    let sizes = cluster_sizes(assignments, k);
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Degenerate(format!("cluster {c} is empty")));
    }
    let mut means = Matrix::zeros(k, data.cols());
    for (i, &a) in assignments.iter().enumerate() {
        for (s, x) in means.row_mut(a).iter_mut().zip(data.row(i)) {
            *s += x;
        }
    }
    for (c, &size) in sizes.iter().enumerate() {
        for s in means.row_mut(c) {
            *s /= size as f64;
        }
    }
    Ok((means, sizes))
}

/// Davies-Bouldin index with each cluster's scatter taken as the mean
/// Euclidean distance of its members to their centroid.
pub fn davies_bouldin(data: &Matrix, assignments: &[usize]) -> Result<f64> {
    let k = label_count(assignments);
    if k < 2 {
        return Err(Error::Degenerate(
            "davies-bouldin needs at least two clusters".into(),
        ));
    }
    let (centroids, sizes) = cluster_means(data, assignments, k)?;
    let mut scatter = vec![0.0; k];
    for (i, &a) in assignments.iter().enumerate() {
        scatter[a] += distance(data.row(i), centroids.row(a));
    }
    for c in 0..k {
        scatter[c] /= sizes[c] as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = distance(centroids.row(i), centroids.row(j));
            let r = if d > 0.0 {
                (scatter[i] + scatter[j]) / d
            } else if scatter[i] + scatter[j] > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            worst = worst.max(r);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Mean silhouette over a seeded subsample drawn without replacement
/// (`subsample_size == 0` or `>= m` uses every point). Intra- and
/// inter-cluster distances are always taken against the full dataset.
/// Members of singleton clusters score 0.
pub fn silhouette(
    data: &Matrix,
    assignments: &[usize],
    subsample_size: usize,
    seed: u64,
) -> Result<f64> {
    let m = data.rows();
    let k = label_count(assignments);
    let sizes = cluster_sizes(assignments, k);
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Degenerate(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let sample: Vec<usize> = if subsample_size == 0 || subsample_size >= m {
        (0..m).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, m, subsample_size).into_vec();
        idx.sort_unstable();
        idx
    };
    let scores: Vec<f64> = sample
        .par_iter()
        .map(|&i| {
            let own = assignments[i];
            if sizes[own] < 2 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            let xi = data.row(i);
            for (j, &c) in assignments.iter().enumerate() {
                if j != i {
                    sums[c] += distance(xi, data.row(j));
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
