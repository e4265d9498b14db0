use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Physical geometry cannot be used (non-positive widths, n_o <= n_e, ...).
    #[error("geometry rejected: {0}")]
    Geometry(String),

    /// The two Gaussian peaks in θ₁−θ₂ overlap beyond the allowed cross-term mass.
    #[error("peaks not separated: cross-term mass fraction {cross_fraction:e} exceeds {limit:e}")]
    PeaksNotSeparated { cross_fraction: f64, limit: f64 },

    #[error(
        "grid window too small: mass outside {outside_mass:e} exceeds {tolerance:e}; \
         suggested half-width {suggested_half_width:e} rad"
    )]
    InsufficientExtent {
        outside_mass: f64,
        tolerance: f64,
        suggested_half_width: f64,
    },

    #[error("quadrature did not converge: achieved relative tolerance {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("linear algebra: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
