//! Criterion benchmarks for the clustering and feature kernels; see `benches/`.
