//! Criterion benchmarks for the hot paths of `mbv-core`. See `benches/`.
