//! Criterion benchmarks for the learning, reachability and control pipeline; see `benches/`.
