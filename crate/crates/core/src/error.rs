use std::path::PathBuf;

use thiserror::Error;

/// Exit code used by the CLI for input and configuration problems.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code used by the CLI for numerical failures (degenerate data, rank loss).
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for this error: 1 for validation, 2 for numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::Validation(_) | Error::Config(_) => {
                EXIT_VALIDATION
            }
            Error::Degenerate(_) | Error::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
