use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// The equation has no root of the requested kind.
    #[error("no admissible root: {0}")]
    NoRoot(String),

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("certificate is inapplicable: {0}")]
    Inapplicable(String),

    /// Monte Carlo estimate was too noisy to decide.
    #[error("Monte Carlo budget too small: relative CI half-width {ci_half_width:.3e} exceeds {limit:.3e}")]
    BudgetTooSmall { ci_half_width: f64, limit: f64 },

    #[error("malformed spectral measure: {0}")]
    Spectral(String),

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    /// True for failures of numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::BudgetTooSmall { .. }
        )
    }
}
