use std::fmt;

use thiserror::Error;

/// The two standing geometric hypotheses every verification run depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Ricci curvature bounded below by a positive constant.
    PositiveRicci,
    /// Second fundamental form of the boundary is nonnegative.
    ConvexBoundary,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::PositiveRicci => f.write_str("Ric >= rho > 0"),
            Hypothesis::ConvexBoundary => f.write_str("convex boundary (II >= 0)"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("hypothesis violated: {hypothesis} (certified value {value:e})")]
    Hypothesis { hypothesis: Hypothesis, value: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver failed for sector l={l}, mode j={j}: {reason}")]
    Solver { l: usize, j: usize, reason: String },

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
