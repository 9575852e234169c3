use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numerical,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid control grid: {0}")]
    InvalidGrid(String),

    #[error("singular thin-plate-spline system: {0}")]
    SingularSystem(String),

    #[error("invalid room layout: {0}")]
    InvalidLayout(String),

    #[error("polygon is self-intersecting")]
    SelfIntersecting,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("found {found} corner columns, need at least 4")]
    TooFewCorners { found: usize },

    #[error("corner at u={u:.1}px has no partner within {tolerance:.1}px")]
    UnpairedCorner { u: f64, tolerance: f64 },

    #[error("corner count mismatch: prediction has {pred}, ground truth has {gt}")]
    CornerCountMismatch { pred: usize, gt: usize },

    #[error("fit diverged at iteration {iteration}: loss is not finite")]
    Diverged { iteration: usize },

    #[error("rejection sampling gave up after {attempts} attempts: {reason}")]
    SamplingFailed { attempts: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// Any other error, tagged with the input it arose from.
    #[error("{path}: {source}")]
    At {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Usage,
            Error::Diverged { .. } | Error::SingularSystem(_) => ErrorCategory::Numerical,
            Error::At { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }

    /// Attaches `path` unless the error already names a file.
    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::Parse { .. } | Error::At { .. }) => e,
            e => Error::At {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
