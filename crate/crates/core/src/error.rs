use thiserror::Error;

/// Errors raised by the library.
///
/// Variants fall into two families: invalid input (`Domain`, `Parameter`,
/// `DegenerateMomentum`, `UnsupportedOrder`, `Config`) and numerical failure
/// (`Quadrature`, `Convergence`, `EnvelopeViolation`). The CLI maps the first
/// family to exit code 1 and the second to exit code 2.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("degenerate momentum: {0}")]
    DegenerateMomentum(&'static str),

    #[error("unsupported order nu = {0}")]
    UnsupportedOrder(i32),

    #[error("quadrature did not converge: estimated error {error:e} after {intervals} subintervals")]
    Quadrature { error: f64, intervals: usize },

    #[error("series did not converge: geometric ratio {ratio} >= 1")]
    Convergence { ratio: f64 },

    #[error("rejection envelope violated: density/envelope = {ratio}")]
    EnvelopeViolation { ratio: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn parameter(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by a failed numerical procedure rather than by
    /// bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. } | Error::Convergence { .. } | Error::EnvelopeViolation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
