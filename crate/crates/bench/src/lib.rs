//! Command-line front end for `bilinear-core`: experiment configs, run
//! orchestration, and JSON/CSV artifacts.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod files;

pub use cli::{run, Cli};
pub use error::{exit_code, CliError, Status};
