//! Criterion benchmarks for `covberry`; see `benches/phases.rs`.
