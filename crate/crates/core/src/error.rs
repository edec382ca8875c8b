use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coefficient {n} is negative ({value:e}); the expression is not a probability generating function")]
    NegativeCoefficient { n: usize, value: f64 },

    #[error("|P(z)| = {modulus:e} > 1 at |z| = {radius}; the expression is not a probability generating function")]
    ModulusExceedsOne { modulus: f64, radius: f64 },

    #[error(
        "tail mass {tail_mass:e} exceeds tolerance {tail_tol:e} at {n_terms} terms (cap reached)"
    )]
    TailToleranceUnmet {
        n_terms: usize,
        tail_mass: f64,
        tail_tol: f64,
    },

    #[error("branch tracking failed at sample {index}: argument jump {jump:.3} rad")]
    BranchTrackingFailure { index: usize, jump: f64 },

    #[error("table tail mass {tail_mass:e} is too heavy for sampling (limit {limit:e})")]
    TailTooHeavy { tail_mass: f64, limit: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Parse(_) | Error::Json(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
