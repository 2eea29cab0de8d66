use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nftwash::clustering::{davies_bouldin, kmeans_fit, silhouette, KMeansParams};
use nftwash::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eight Gaussian-ish blobs in ten dimensions.
fn blobs(m: usize, n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..n).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let mut data = Vec::with_capacity(m * n);
    for i in 0..m {
        let c = &centers[i % centers.len()];
        for &x in c {
            data.push(x + rng.random_range(-1.0..1.0));
        }
    }
    Matrix::from_vec(m, n, data)
}

fn bench_kmeans(c: &mut Criterion) {
    let data = blobs(20_000, 10, 1);
    let params = KMeansParams::default();
    c.bench_function("kmeans_fit 20k x 10, k = 8", |b| {
        b.iter(|| kmeans_fit(black_box(&data), 8, 7, params).unwrap())
    });
}

fn bench_validity(c: &mut Criterion) {
    let data = blobs(20_000, 10, 2);
    let labels = kmeans_fit(&data, 8, 3, KMeansParams::default())
        .unwrap()
        .assignments;
    c.bench_function("davies_bouldin 20k x 10", |b| {
        b.iter(|| davies_bouldin(black_box(&data), &labels).unwrap())
    });
    c.bench_function("silhouette 20k x 10, subsample 2000", |b| {
        b.iter(|| silhouette(black_box(&data), &labels, 2000, 5).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_kmeans, bench_validity
}
criterion_main!(benches);
