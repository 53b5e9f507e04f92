//! Criterion benchmarks for `sinesch-core`; see `benches/`.
