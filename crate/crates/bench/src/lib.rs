//! Benchmark-only crate; see `benches/per_step.rs`.
