use thiserror::Error;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Evaluation point outside the open domain `(-xi, xi)` of a free energy.
    #[error("eta = {eta} lies outside the open domain (-{xi}, {xi})")]
    Domain { eta: f64, xi: f64 },

    #[error("relative variance is undefined at eta = 0")]
    UndefinedAtZero,

    #[error("no closed-form tail for {0}")]
    Unsupported(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("root finding did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("tilted sampler failure: {0}")]
    GenericSamplerFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors coming from numerical exhaustion rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure(_) | Error::ConvergenceFailure(_) | Error::GenericSamplerFailure(_)
        )
    }
}
