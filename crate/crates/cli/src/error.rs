use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Core(#[from] relbgk::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Machine-readable category, one of `io`, `config`, `input`, `solver`,
    /// `stepping`, `snapshot`, `check`.
    pub fn category(&self) -> &'static str {
        match self {
            Self::Io { .. } | Self::Output(_) => "io",
            Self::Invalid(_) => "config",
            Self::Core(e) => e.category(),
            Self::CheckFailed(_) => "check",
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.category())
    }
}

/// Process exit code of an error category. Usage errors exit with 2.
pub fn exit_code(category: &str) -> i32 {
    match category {
        "config" => 3,
        "input" => 4,
        "solver" => 5,
        "stepping" => 6,
        "snapshot" => 7,
        "check" => 8,
        _ => 1,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
