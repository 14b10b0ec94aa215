//! Criterion benchmarks for the edge-flow pipeline; see `benches/`.
