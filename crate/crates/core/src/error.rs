//! Crate-wide error type with the failure classes the pipeline reports.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),

    #[error("insufficient modes: {0}")]
    InsufficientModes(String),

    #[error("iteration cap exceeded: {0}")]
    IterationCap(String),

    #[error("positivity violation: {0}")]
    PositivityViolation(String),

    #[error("variable mismatch: expected {expected}, got {got}")]
    VariableMismatch { expected: &'static str, got: &'static str },

    #[error("forcing too strong: {0}")]
    ForcingTooStrong(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("tail mismatch: {0}")]
    TailMismatch(String),

    #[error("iteration divergence: {0}")]
    Divergence(String),

    #[error("kernel obstruction: {0}")]
    KernelObstruction(String),

    #[error("near-zero Wronskian: {0}")]
    WronskianDegenerate(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("phase unwrap failure: {0}")]
    PhaseUnwrap(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("stagnation: {0}")]
    Stagnation(String),

    #[error("out of evaluation hull: {0}")]
    OutOfHull(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code class: 1 validation, 2 numeric, 3 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::VariableMismatch { .. } | Error::Io(_) => 1,
            Error::Quadrature(_)
            | Error::Divergence(_)
            | Error::WronskianDegenerate(_)
            | Error::IllConditionedFit(_)
            | Error::PhaseUnwrap(_)
            | Error::Stagnation(_)
            | Error::TailMismatch(_)
            | Error::OutOfHull(_)
            | Error::ForcingTooStrong(_)
            | Error::KernelObstruction(_) => 2,
            Error::IterationCap(_) | Error::PositivityViolation(_) | Error::InsufficientModes(_) => 3,
        }
    }
}
