//! Criterion benchmarks for the simulation and training pipeline live in `benches/`.
