use thiserror::Error;

/// Errors raised by the state engine and the information functionals.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation deficit {deficit:.3e} exceeds tolerance {tol:.3e} ({what})")]
    Truncation {
        what: &'static str,
        deficit: f64,
        tol: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension overflow: {0} basis states")]
    DimensionOverflow(u128),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("covariance matrix violates the uncertainty relation (min eigenvalue {0:.3e})")]
    Unphysical(f64),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("{what} did not converge (relative change {change:.3e})")]
    Convergence { what: &'static str, change: f64 },

    #[error("eigendecomposition failed")]
    Eigen,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
