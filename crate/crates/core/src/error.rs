use thiserror::Error;

use crate::feasibility::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("series length mismatch: expected p = {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("plan does not match instance: {0}")]
    PlanShape(String),

    #[error("precondition failed: {message} ({} violation(s))", violations.len())]
    Precondition {
        message: String,
        violations: Vec<Violation>,
    },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error("malformed model: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
