//! Experiment runner for `optlin-core`: flat config files, CSV output and
//! the `optlin` command-line tool.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

pub use config::{Config, Experiment, Settings};
pub use experiments::{run, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] optlin_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for anything rejected before computing, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Compute(optlin_core::Error::InvalidParameter(_)) => 2,
            _ => 1,
        }
    }
}
