use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failures surfaced by construction, evaluation, and simulation entry points.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A point was handed to a basis or quadrature routine while lying
    /// outside the domain rectangle.
    OutsideDomain { x: f64, y: f64 },
    /// A parameter failed validation; the message names the offender.
    InvalidParameter(&'static str),
    /// Two spectral objects built against different mode sets were combined.
    ModeCountMismatch { expected: usize, got: usize },
    /// A position slice did not match the configured number of agents.
    AgentCountMismatch { expected: usize, got: usize },
    /// The quadrature grid cannot resolve the highest requested mode.
    ResolutionTooCoarse { needed: u32, got: u32 },
    /// Normalizing a density produced a non-finite or non-positive mass.
    DegenerateDensity,
    /// A state component became non-finite during integration.
    NumericalFailure { step: u64 },
    /// The requested diagnostic is undefined for the given data.
    InvalidAnalysis(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutsideDomain { x, y } => {
                write!(f, "point ({x}, {y}) lies outside the domain")
            }
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::ModeCountMismatch { expected, got } => {
                write!(f, "mode count mismatch: expected {expected}, got {got}")
            }
            Error::AgentCountMismatch { expected, got } => {
                write!(f, "agent count mismatch: expected {expected}, got {got}")
            }
            Error::ResolutionTooCoarse { needed, got } => {
                write!(
                    f,
                    "quadrature grid too coarse: need at least {needed} points per axis, got {got}"
                )
            }
            Error::DegenerateDensity => {
                write!(f, "density mass over the domain is not finite and positive")
            }
            Error::NumericalFailure { step } => {
                write!(f, "non-finite state encountered at step {step}")
            }
            Error::InvalidAnalysis(what) => write!(f, "invalid analysis request: {what}"),
        }
    }
}

impl core::error::Error for Error {}
