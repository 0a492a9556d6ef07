use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] tuckreg_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// A file did not follow its documented layout.
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// A configuration value was rejected before any work started.
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// True when the caller, not the environment, is at fault.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Self::Config(_)
                | Self::Core(
                    tuckreg_core::Error::InvalidArgument(_)
                        | tuckreg_core::Error::ShapeMismatch(_)
                        | tuckreg_core::Error::OutOfRange { .. }
                )
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
