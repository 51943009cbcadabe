//! Error type shared across the pipeline.

use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum HarError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input data, with the 1-based line number where it occurred.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A precondition on an operation's arguments was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A run configuration that cannot be executed.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Gradient training produced a non-finite loss.
    #[error("training diverged in {learner}: {message}")]
    Diverged { learner: String, message: String },

    /// An inner error annotated with where it happened (fold, stage, member).
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<HarError>,
    },

    /// An internal consistency check failed; always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl HarError {
    /// Wraps `self` with a location string such as `"fold 3, stage features"`.
    pub fn in_context(self, context: impl Into<String>) -> HarError {
        HarError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarError>;
