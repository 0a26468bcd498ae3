use thiserror::Error;

/// Errors produced by the analytical model, the simulation oracle and the
/// experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("lag covariance is near-singular (phi = {phi})")]
    IllConditioned { phi: f64 },

    #[error("series did not converge: {0}")]
    SeriesNonConvergence(String),

    #[error(
        "quadrature did not converge: estimate {estimate:.3e} exceeds threshold {threshold:.3e}"
    )]
    QuadratureNonConvergence { estimate: f64, threshold: f64 },

    #[error("link state {state} has steady-state probability {probability:.3e}; transition row undefined")]
    DegenerateState { state: usize, probability: f64 },

    #[error("mutual-information ratio undefined: I(L3; L1, L2) = {denominator:.3e} bits")]
    UndefinedRatio { denominator: f64 },

    #[error("link state {state} observed only {count} times (need at least {required})")]
    InsufficientCount {
        state: usize,
        count: u64,
        required: u64,
    },

    #[error("estimate has zero standard error")]
    DegenerateEstimate,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical machinery (series or quadrature).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SeriesNonConvergence(_)
                | Error::QuadratureNonConvergence { .. }
                | Error::IllConditioned { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
