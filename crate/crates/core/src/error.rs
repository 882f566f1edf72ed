use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: I-tag at sentence start in strict IOB2 input ({tag})")]
    Iob2Violation { line: usize, tag: String },

    #[error("invalid token: {0}")]
    InvalidToken(String),

    #[error("overlapping spans: {first} and {second}")]
    OverlappingSpans { first: String, second: String },

    #[error("span {span} out of range for sentence of length {len}")]
    SpanOutOfRange { span: String, len: usize },

    #[error("corpora are not token-aligned: {0}")]
    Misaligned(String),

    #[error("inventory: {0}")]
    Inventory(String),

    #[error("sampling: {0}")]
    Sampling(String),

    #[error("augmentation plan: {0}")]
    Plan(String),

    #[error("window labels length {got} does not match window token count {expected}")]
    WindowLength { expected: usize, got: usize },

    #[error("unknown flag id {0}")]
    UnknownFlag(String),

    #[error("flag {0} already has a decision")]
    DuplicateDecision(String),

    #[error("flag {flag}: {message}")]
    StaleFlag { flag: String, message: String },

    #[error("conflicting accepted flags {first} and {second}")]
    ConflictingFlags { first: String, second: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid user input (as opposed to I/O failures).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
