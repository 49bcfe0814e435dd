//! Criterion benchmarks for `lorasg-core`; see `benches/model.rs`.
