use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("index overflow on line {line}: {value}")]
    IndexOverflow { line: usize, value: String },

    #[error("unsupported MatrixMarket banner: {0}")]
    UnsupportedBanner(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupt {format} payload: {msg}")]
    Corrupt { format: &'static str, msg: String },

    #[error("matrix too large for dense materialization ({0} cells)")]
    TooLarge(u128),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn corrupt(format: &'static str, msg: impl Into<String>) -> Self {
        Error::Corrupt {
            format,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
