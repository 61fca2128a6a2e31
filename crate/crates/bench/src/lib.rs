//! Benchmark harness crate; the benches live under `benches/`.
