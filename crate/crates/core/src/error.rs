use thiserror::Error;

use crate::oracle::OracleError;

pub type Result<T, E = HjError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HjError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("malformed word encoding: {0}")]
    MalformedWord(String),

    /// The ascending scan at `level` covered every candidate without a repeated composite colour.
    #[error("no collision at level {level} after scanning {scanned} candidates")]
    NoCollision { level: usize, scanned: u64 },

    #[error("search budget of {0} nodes exhausted")]
    SearchBudget(u64),

    #[error(transparent)]
    Oracle(#[from] OracleError),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HjError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HjError::InvalidArgument(msg.into())
    }
}
