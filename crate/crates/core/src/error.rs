use thiserror::Error;

use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("spectral measure is not a Lévy measure: {0}")]
    SpectralDivergence(String),

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error("cannot be decided numerically: {0}")]
    Undecidable(String),

    #[error("law is outside the mapping domain: {0}")]
    DomainViolation(String),

    #[error("image of the tensor-product kernel is not positive: {0}")]
    ImageNotPositive(String),

    #[error("measure has infinite mass: {0}")]
    InfiniteMass(String),

    #[error("unsupported triple: {0}")]
    UnsupportedTriple(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
