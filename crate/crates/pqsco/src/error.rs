use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pqsco_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    /// Malformed JSON; `field` is the path inside the document.
    #[error("{}: at `{field}`: {reason}", path.display())]
    Json {
        path: PathBuf,
        field: String,
        reason: String,
    },

    #[error("capacity: {0}")]
    Capacity(String),

    #[error("environment: {0}")]
    Environment(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
