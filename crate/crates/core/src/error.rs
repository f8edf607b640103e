use alloc::string::String;

/// Errors raised by the numerical core.
///
/// Variants map one-to-one onto the harness exit-code classes: everything
/// except `Numeric`, `Quadrature`, `Lu` and `Resolution` is a configuration
/// problem.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inadmissible h = {h:e}: {reason}")]
    InadmissibleH { h: f64, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge on [{a:e}, {b:e}]: estimated error {error:e} after {intervals} subintervals")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        intervals: usize,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("LU breakdown at row {row}")]
    Lu { row: usize },

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("no passing h in the tested range [{h_min:e}, {h_max:e}]")]
    ThresholdNotFound { h_min: f64, h_max: f64 },

    #[error("under-resolved grid: stencil error estimate {estimate:e} exceeds {limit:e}")]
    Resolution { estimate: f64, limit: f64 },
}

impl Error {
    /// True for errors that come from bad inputs rather than from numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Config(_)
                | Error::InadmissibleH { .. }
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
