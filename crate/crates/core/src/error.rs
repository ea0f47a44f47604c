use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eigenvalues {0} and {1} are not separated (gap {2:e})")]
    DuplicateEigenvalue(usize, usize, f64),
    #[error("eigenvalue {index} = {value} lies outside [-1, 1]")]
    OutOfInterval { index: usize, value: f64 },
    #[error("Vandermonde inverse is ill-conditioned: |pi_{index}| = {value:e}")]
    IllConditioned { index: usize, value: f64 },
    #[error("Newton iteration for Gauss-Legendre node {0} did not converge")]
    NoConvergence(usize),
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("truncation order {order} is below the kernel degree {degree}")]
    TruncationBelowKernelDegree { order: usize, degree: usize },
    #[error("velocity node {0} sits where the weight vanishes")]
    NodeAtEndpoint(f64),
    #[error("at least {needed} time samples required, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("matrix norm {0:e} exceeds the representable scaling range")]
    Overflow(f64),
    #[error("CFL condition violated: dt * max|speed| / dx = {0}")]
    CflViolation(f64),
    #[error("bump support [{lo}, {hi}] is not inside the velocity interval")]
    BumpOutsideInterval { lo: f64, hi: f64 },
    #[error("grids or sample times do not match")]
    GridMismatch,
    #[error("imaginary residue {0:e} after inverse transform")]
    ImaginaryResidue(f64),
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
