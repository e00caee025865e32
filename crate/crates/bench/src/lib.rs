//! Criterion benchmarks for the sequential kernels and the parallel sort; see `benches/`.
