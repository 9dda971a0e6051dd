//! Files, batches and the command line around [`stabreg_core`].

use std::path::PathBuf;

use stabreg_core::ScenarioError;
use thiserror::Error;

pub mod scenario_file;
pub mod sweep;
pub mod trace_file;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: malformed trace: {msg}")]
    Trace { path: PathBuf, line: usize, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
}

impl Error {
    /// 2 for configuration problems, 3 for unreadable or malformed files.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Scenario(_) => 2,
            Error::Io { .. } | Error::Trace { .. } => 3,
        }
    }
}
