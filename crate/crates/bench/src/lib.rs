//! Benchmark harness: runs solver configurations over test problems and
//! writes result tables, convergence histories and a JSON summary.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_configuration, BenchConfig, Configuration, Preset, ProblemSpec};
pub use output::{emit, read_results, result_rows, ResultRow};
pub use runner::{run_bench, BenchReport, RunOptions};
