//! Benchmarks for `npir-core`; see `benches/`.
