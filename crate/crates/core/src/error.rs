use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
///
/// Non-convergence of an adaptive integral is not an error here; it is
/// reported through [`crate::quadrature::Status`] so that sweeps can record
/// it and continue.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of supported range: {0}")]
    Range(String),

    #[error("argument outside function domain: {0}")]
    Domain(String),

    #[error("point ({x}, {y}) is outside the region of {func}")]
    Region { func: &'static str, x: f64, y: f64 },

    /// An arccos argument left [-1, 1] by more than the clamp slack.
    #[error("arccos argument {arg} out of range at t={t}, x={x}, y={y:?}")]
    ArccosDomain {
        arg: f64,
        t: f64,
        x: f64,
        y: Option<f64>,
    },

    #[error("series did not converge within {terms} terms (partial sum {partial})")]
    SeriesConvergence { terms: usize, partial: f64 },

    #[error("integrand returned a non-finite value at x={x}, y={y:?}")]
    NonFinite { x: f64, y: Option<f64> },

    #[error("invalid integration setup: {0}")]
    Setup(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
