//! Benchmark-only crate; see `benches/attribution.rs`.
