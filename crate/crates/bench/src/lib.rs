//! Benchmark-only crate; the benchmarks live in `benches/core.rs` and run
//! with `cargo bench -p rejective-bench`.
