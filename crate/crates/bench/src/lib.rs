//! Benchmark-only crate; see `benches/core.rs`.  Kept as a separate
//! workspace member so criterion and its dependency tree stay out of the
//! library and CLI builds.
