use thiserror::Error;

/// Errors raised while configuring or running a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value violates its documented range.
    #[error("invalid `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// An observable was requested that the excitation sector cannot support.
    #[error("capability: {0}")]
    Capability(String),

    /// Two objects that must agree in shape do not.
    #[error("internal consistency: {0}")]
    Dimension(String),

    /// The integrator could not reach the requested accuracy.
    #[error("integration failed at t = {time}: error estimate {achieved:e} exceeds tolerance {tolerance:e}")]
    Integration {
        time: f64,
        achieved: f64,
        tolerance: f64,
    },

    /// A disorder realization failed inside an ensemble run.
    #[error("realization {index} (seed {seed:#018x}) failed: {source}")]
    Realization {
        index: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// The dense oracle refuses matrices above its dimension cap.
    #[error("dense oracle refuses dimension {dim} (cap {cap})")]
    OracleTooLarge { dim: usize, cap: usize },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors that stem from numerics rather than user input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Integration { .. } => true,
            Error::Realization { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
