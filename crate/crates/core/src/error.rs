use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// The index file could not be decoded. `section` names the part of the
    /// file that failed (header, doc table, centroids, lists, ...).
    #[error("corrupt index: {section}: {detail}")]
    CorruptIndex { section: &'static str, detail: String },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn corrupt(section: &'static str, detail: impl Into<String>) -> Self {
        Error::CorruptIndex {
            section,
            detail: detail.into(),
        }
    }
}
