use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not fit the operation.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// A class or symbol index is out of range.
    #[error("index error: {index} out of range for {bound}")]
    Index { index: usize, bound: usize },
    /// Tape or optimizer used in the wrong state (e.g. backward twice).
    #[error("state error: {0}")]
    State(String),
    /// NaN or infinity where a finite value is required.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Invalid input data (empty word, empty sentence, ...).
    #[error("input error: {0}")]
    Input(String),
    #[error("config error: {0}")]
    Config(String),
    /// Corpus content that does not agree with its configuration.
    #[error("data error: {0}")]
    Data(String),
    /// Malformed checkpoint or corpus file.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
