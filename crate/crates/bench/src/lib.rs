//! Criterion benchmarks for `stabsym-core`; see `benches/`.
