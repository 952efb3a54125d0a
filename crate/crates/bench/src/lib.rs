//! Criterion benchmarks for settling and the scoring pipeline live in `benches/`.
