use thiserror::Error;

/// Errors raised by the geometry, correction, kinematics and fitting routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain where the geometry is defined
    /// (non-positive depth, angle underflow, point behind the viewer, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A named parameter failed validation.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// A mesh vertex could not be transformed.
    #[error("vertex {index} ({x}, {y}, {z}): {reason}")]
    Vertex {
        index: usize,
        x: f64,
        y: f64,
        z: f64,
        reason: String,
    },

    /// Malformed input data, with the 1-based line it was found on.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    /// The damped normal equations could not be factorized.
    #[error("normal equations singular; damping exceeded {0:e}")]
    Singular(f64),

    /// A trajectory has no matching target record.
    #[error("no target for trial {0}")]
    MissingTarget(u64),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
