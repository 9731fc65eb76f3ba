use thiserror::Error;

/// Errors raised by the model, simulator and validation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "quadrature did not converge ({context}): estimate {estimate:e}, \
         achieved error {achieved:e}, requested {requested:e}"
    )]
    QuadratureFailed {
        context: String,
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("point (s = {s}, t = {t}) outside the domain: {reason}")]
    OutOfDomain { s: f64, t: f64, reason: String },

    #[error(
        "truncation level {eps} yields {expected:e} expected atoms (limit {limit:e}); \
         choose a larger truncation level"
    )]
    TooManyAtoms { eps: f64, expected: f64, limit: f64 },

    #[error("jump-size rejection sampler exceeded {0} iterations")]
    RejectionCap(usize),

    #[error("first moment of the Levy measure is infinite; positivity floor unavailable")]
    FloorUnavailable,

    #[error("initial curve violates the positivity floor at t = {t}: mu0 = {mu0}, floor = {floor}")]
    FloorViolated { t: f64, mu0: f64, floor: f64 },

    #[error("closed form unavailable: {0}")]
    ClosedFormUnavailable(String),

    #[error("closed-form and quadrature drift disagree at (s = {s}, t = {t}): {closed} vs {quadrature}")]
    CrossCheckFailed {
        s: f64,
        t: f64,
        closed: f64,
        quadrature: f64,
    },

    #[error("covariance is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("at least {min} paths required, got {got}")]
    TooFewPaths { got: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
