use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular or numerically non-invertible: {0}")]
    Singular(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("insufficient mass: {0}")]
    InsufficientMass(String),
    #[error("singular input: {0}")]
    SingularInput(String),
    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("empty sample set: {0}")]
    EmptySamples(String),
    #[error("singular integrand: {0}")]
    SingularIntegrand(String),
}

pub type Result<T> = std::result::Result<T, Error>;
