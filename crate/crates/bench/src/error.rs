use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Rejected input: bad flags, configs, or data files.
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    /// A library error after validation succeeded.
    #[error(transparent)]
    Core(#[from] bilinear_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Turns a library error raised while validating input into a config error.
pub fn invalid(context: &str) -> impl Fn(bilinear_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{context}: {e}"))
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// 0 when every check passed, 1 on a check failure, 2 on invalid input or
/// I/O errors.
pub fn exit_code(result: &Result<Status, CliError>) -> ExitCode {
    match result {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(_) => ExitCode::from(2),
    }
}
