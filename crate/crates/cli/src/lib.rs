//! Instance generation, the benchmark harness and DOT export behind the
//! `mptsp` binary.

pub mod bench;
pub mod dot;
pub mod generate;

pub use bench::{run_bench, BenchReport, BenchRow};
pub use dot::export_dot;
pub use generate::{generate, BenchConfig, Family, GraphModel};
