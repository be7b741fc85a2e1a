use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    /// The matrix norm exceeds the range where the moment quadrature is trusted.
    #[error("|J| = {norm} exceeds the quadrature envelope {limit}")]
    OutOfRange { norm: f64, limit: f64 },
    #[error("{what}: {value} outside the domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("rejection sampler acceptance {rate:e} below the supported floor")]
    Envelope { rate: f64 },
    #[error("{0} did not converge")]
    NonConverged(&'static str),
    #[error("decay fit failed: {0}")]
    Fit(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
