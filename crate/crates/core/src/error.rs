use std::path::PathBuf;

/// Errors raised by geometry, model construction, filtering, I/O and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("depth {depth} is not strictly positive (point at or behind the camera)")]
    DepthNonPositive { depth: f64 },

    #[error("height {height} px must be strictly positive")]
    NonPositiveHeight { height: f64 },

    #[error("time step {dt} s must be strictly positive")]
    InvalidTimestep { dt: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("innovation covariance is numerically singular")]
    SingularInnovation,

    #[error("estimate covariance is singular or not positive definite")]
    SingularCovariance,

    #[error("matrix square root failed: {0}")]
    DecompositionFailure(String),

    #[error("function undefined at sigma point: {0}")]
    FunctionDomainError(String),

    #[error("track has no frames")]
    EmptyTrack,

    #[error("truth and estimate series are not frame-aligned: {0}")]
    FrameMisalignment(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
