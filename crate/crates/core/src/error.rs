use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {key}: {msg}")]
    Invalid { key: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: record {record}: frame index {got} does not follow {prev}")]
    NonMonotonicFrame {
        path: PathBuf,
        line: usize,
        record: usize,
        prev: u64,
        got: u64,
    },

    #[error("{path}:{line}: record {record}: timestamp {got} precedes {prev}")]
    NonMonotonicTimestamp {
        path: PathBuf,
        line: usize,
        record: usize,
        prev: u64,
        got: u64,
    },

    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Invalid {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn rekey(self, key: &str) -> Self {
        match self {
            Error::Invalid { key: inner, msg } => Error::Invalid {
                key: key.to_string(),
                msg: format!("{inner}: {msg}"),
            },
            other => other,
        }
    }
}
