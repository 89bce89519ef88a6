//! Command-line front end for `critnls`.

pub mod cache;
pub mod commands;
pub mod config;

use std::process::ExitCode;

/// Failure classes, each with a stable exit code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    /// Bad command line or configuration (exit 2).
    #[error("{0}")]
    Usage(String),
    /// A well-formed request with a negative mathematical answer (exit 1).
    #[error("{0}")]
    Domain(String),
    /// Filesystem trouble (exit 1).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

/// Outcome of a command that ran to the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// The command worked but its answer is negative (inadmissible
    /// potential, failed cells, numerical breakdown).
    Negative,
}

impl Status {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Status::Success => ExitCode::SUCCESS,
            Status::Negative => ExitCode::from(1),
        }
    }
}

impl From<critnls::Error> for CliError {
    fn from(e: critnls::Error) -> Self {
        match e {
            critnls::Error::Config(m) => CliError::Usage(m),
            other => CliError::Domain(other.to_string()),
        }
    }
}
