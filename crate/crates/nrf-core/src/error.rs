use std::path::PathBuf;

/// Crate-wide error type.
///
/// The CLI maps variants onto process exit codes: configuration and domain
/// errors exit 1, I/O errors exit 2, solver divergence exits 3.
#[derive(Debug, thiserror::Error)]
pub enum NrfError {
    /// A mathematical precondition was violated (angle out of range,
    /// ellipse outside the field of view, odd grid size, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An index was outside the 1-based grid range.
    #[error("index error: {0}")]
    Index(String),

    /// Inconsistent shapes, invalid configuration values or malformed flags.
    #[error("configuration error: {0}")]
    Config(String),

    /// File access failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A serialized artifact did not match its declared format.
    #[error("format error: {0}")]
    Format(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at step {step}")]
    Diverged { step: usize },
}

impl NrfError {
    pub fn domain(msg: impl Into<String>) -> Self {
        NrfError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        NrfError::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        NrfError::Format(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NrfError::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            NrfError::Io { .. } => 2,
            NrfError::Diverged { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, NrfError>;
