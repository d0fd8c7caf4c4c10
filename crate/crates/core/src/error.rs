use std::path::PathBuf;

/// Errors produced anywhere in the reconstruction toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid depth {0} (must be > 0)")]
    InvalidDepth(f64),

    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    OutOfBounds { u: f64, v: f64, width: usize, height: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("missing frames: {0:?}")]
    MissingFrames(Vec<u32>),

    #[error("frame mismatch: observation at frame {0} has no ego pose")]
    FrameMismatch(u32),

    #[error("undefined metrics: {0}")]
    UndefinedMetrics(String),

    #[error("scene script error: {0}")]
    Script(String),

    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse { path: path.into(), message: message.to_string() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
