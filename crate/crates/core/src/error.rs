use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("grid size {0} is not of the form 3·3^k")]
    InvalidGridSize(usize),

    #[error("sampling resolution {0} must be divisible by 3 and at least 9")]
    InvalidResolution(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("eigenvalue iteration did not converge for a {dim}x{dim} matrix")]
    EigenNoConvergence { dim: usize },

    #[error("{value} lies outside the admissible interval [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("unknown transfer operator '{0}'")]
    UnknownTransfer(String),

    #[error("unknown relaxation scheme '{0}'")]
    UnknownScheme(String),

    #[error("iterative solve failed: {0}")]
    SolveFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures of the numerics (singular systems, eigensolver or iterative
    /// solver breakdown) as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::EigenNoConvergence { .. } | Error::SolveFailed(_)
        )
    }
}
