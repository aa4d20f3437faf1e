//! Criterion benchmarks for the hot kernels of `dirac2d-core`; see `benches/kernels.rs`.
