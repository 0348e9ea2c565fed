//! Library side of the `relbgk` command-line tool.

pub mod commands;
pub mod config;
mod error;
pub mod output;

pub use config::{parse_config, parse_str, RunConfig, ScenarioId};
pub use error::{exit_code, CliError, CliResult};
