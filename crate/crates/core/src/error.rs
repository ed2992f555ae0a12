use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A model configuration is inconsistent or malformed.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Input data cannot be used as requested.
    #[error("data error: {0}")]
    Data(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Model fitting failed to converge to a usable state.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True when the failure came from the filesystem rather than from the
    /// content of a file.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv { source, .. } => source.is_io_error(),
            _ => false,
        }
    }
}
