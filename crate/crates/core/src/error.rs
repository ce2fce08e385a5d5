use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("flow chain is broken between links {index} and {next}: target {target} != source {source_frame}")]
    BrokenChain {
        index: usize,
        next: usize,
        target: usize,
        source_frame: usize,
    },

    #[error("missing input: {0}")]
    Missing(String),

    #[error("point cloud is empty after exclusion")]
    EmptyCloud,

    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or parameters.
    Usage,
    /// Unreadable, corrupt or inconsistent input files.
    InputFormat,
    /// A pipeline stage produced something it must not (e.g. an empty cloud).
    Invariant,
}

impl Error {
    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::Shape(_)
            | Error::InvalidPose(_)
            | Error::BrokenChain { .. }
            | Error::Missing(_)
            | Error::Format { .. }
            | Error::Io { .. } => ErrorKind::InputFormat,
            Error::EmptyCloud | Error::DegenerateScene(_) => ErrorKind::Invariant,
        }
    }
}
