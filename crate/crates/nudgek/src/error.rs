//! Crate-wide error type.
//!
//! Errors split into two families: configuration errors (bad user input,
//! impossible parameter combinations) and numerical errors (singular systems,
//! failed eigenvalue extraction, internal consistency checks). The CLI maps
//! the first family to exit code 1 and the second to exit code 2.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("initial vector is not a probability vector: {0}")]
    NonStochasticAlpha(String),

    #[error("matrix is not a nonsingular sub-generator: {0}")]
    NotSubGenerator(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable system: {0}")]
    Unstable(String),

    #[error("resolvent (sI - S) is singular at s = {0}")]
    SingularResolvent(f64),

    #[error("singular linear system in {0}")]
    Singular(String),

    #[error("dominant eigenvalue is complex: {re:e} + {im:e}i")]
    ComplexDominantEigenvalue { re: f64, im: f64 },

    #[error("eigenvector extraction failed: {0}")]
    NotConverged(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("swap depth {0} exceeds the limit of {limit} for distribution curves", limit = crate::nudge::MAX_CURVE_SWAP_DEPTH)]
    SwapDepthTooLarge(u32),

    #[error("too few simulation batches: need at least {min}, got {got}")]
    TooFewBatches { min: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI reports for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch(_)
            | Error::NonStochasticAlpha(_)
            | Error::NotSubGenerator(_)
            | Error::InvalidParameter(_)
            | Error::Unstable(_)
            | Error::SwapDepthTooLarge(_)
            | Error::TooFewBatches { .. }
            | Error::Config(_)
            | Error::Io(_) => 1,
            Error::SingularResolvent(_)
            | Error::Singular(_)
            | Error::ComplexDominantEigenvalue { .. }
            | Error::NotConverged(_)
            | Error::Inconsistent(_) => 2,
        }
    }
}
