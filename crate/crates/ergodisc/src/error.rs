use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The configuration or a referenced input is unusable.
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ergodisc_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    /// A file that was read back is malformed.
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Core(e) if e.is_budget())
    }
}
