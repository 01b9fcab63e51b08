//! Criterion benchmarks for the parqc runtime live in `benches/`.
