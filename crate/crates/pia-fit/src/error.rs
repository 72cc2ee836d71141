use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the command-line layer.
///
/// Everything here maps to exit code 1 (usage, configuration, or I/O
/// trouble); iteration outcomes are not errors and carry their own exit
/// codes instead.
#[derive(Debug, Error)]
pub enum CliError {
    /// Reading or writing a file failed.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An input file had the right shape but unparseable content.
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    /// Flags that contradicted each other or a missing required setting.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A report or data structure could not be serialized.
    #[error("serialization failed: {0}")]
    Serialize(String),

    /// Anything the fitting library itself rejected.
    #[error(transparent)]
    Fit(#[from] mlspia::Error),
}

impl CliError {
    /// Wraps an `io::Error` together with the path it concerns.
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
