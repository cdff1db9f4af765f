use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the simulator.
///
/// The variants map onto the CLI exit codes: configuration problems exit
/// with 2, bad input data with 3 and runtime invariant breaches with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data validation error: {0}")]
    Data(String),

    #[error("invariant breach: {0}")]
    Invariant(String),

    #[error("contact schedule has no entry for day {day} (schedule covers {len} days)")]
    Horizon { day: u32, len: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Horizon { .. } => 2,
            Error::Data(_) | Error::Csv { .. } => 3,
            Error::Invariant(_) => 4,
            Error::Io { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
