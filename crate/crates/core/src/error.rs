use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("malformed tag {0:?}")]
    TagParse(String),

    #[error("invalid edit span ({start}, {end}): {reason}")]
    InvalidSpan {
        start: usize,
        end: usize,
        reason: &'static str,
    },

    #[error("edit ({start}, {end}) is out of range for a source of {len} tokens")]
    OutOfRange { start: usize, end: usize, len: usize },

    #[error("overlapping edits {first} and {second}")]
    OverlappingEdits { first: String, second: String },

    #[error("transform {tag} is not applicable to {token:?}")]
    InapplicableTransform { tag: String, token: String },

    #[error("tag sequence of length {found} does not fit {tokens} tokens (expected {expected})")]
    TagLengthMismatch {
        tokens: usize,
        expected: usize,
        found: usize,
    },

    #[error("tag sequence position 0 only accepts $KEEP or $APPEND, found {0}")]
    InvalidStartTag(String),

    #[error("vocabulary mismatch: expected {expected}, found {found}")]
    VocabMismatch { expected: String, found: String },

    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),

    #[error("malformed distribution: {0}")]
    Distribution(String),

    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),

    #[error("ensemble member {member}: {reason}")]
    EnsembleMember { member: usize, reason: String },

    #[error("{0}")]
    Contract(String),

    #[error("{origin}:{line}: {message}")]
    Format {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("tagger has no prediction for sentence {0:?}")]
    NoPrediction(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }
}
