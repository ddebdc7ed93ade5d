use thiserror::Error;

/// Errors raised by the entropy toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("resource limit exceeded: {what} needs {required}, budget is {budget}")]
    Resource {
        what: String,
        required: u128,
        budget: u128,
    },

    #[error("cover does not cover element {element}")]
    Coverage { element: usize },

    #[error("ground sets differ: {left} vs {right} elements")]
    GroundMismatch { left: usize, right: usize },

    #[error("no positive radius works at resolution {mesh}")]
    Resolution { mesh: f64 },

    #[error("numerically indeterminate: {0}")]
    Indeterminate(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
