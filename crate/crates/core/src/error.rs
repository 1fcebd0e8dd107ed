use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid algebroid data: {0}")]
    InvalidSpec(String),
    #[error("symplectic matrix is singular (det = {det:e})")]
    SingularOmega { det: f64 },
    #[error("integration failed at step {step}: {reason}")]
    Integration { step: usize, reason: String },
    #[error("scenario error in {field}: {reason}")]
    Schema { field: String, reason: String },
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
