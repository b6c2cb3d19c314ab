//! Benchmark harness: configuration, run orchestration and result files.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{BenchmarkConfig, Cell, Metric};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}
