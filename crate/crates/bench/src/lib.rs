//! Criterion benchmarks for `pinlab-core`; see `benches/`.
