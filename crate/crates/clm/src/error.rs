use std::path::PathBuf;

use thiserror::Error;

/// Pipeline failures. [`PipelineError::exit_code`] maps them onto the CLI's
/// exit statuses.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dataset at {0} has no usable images")]
    EmptyDataset(PathBuf),
    #[error("class {class:?} has {have} images, need more than {need}")]
    InsufficientSamples { class: String, have: usize, need: usize },
    #[error("cannot read image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: clm_core::Error,
    },
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

impl PipelineError {
    pub fn core(context: impl Into<String>, source: clm_core::Error) -> Self {
        Self::Core {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage errors, 2 for data errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use clm_core::Error as E;
        match self {
            Self::Config(_) => 1,
            Self::Core { source, .. } => match source {
                E::NotPositiveDefinite { .. }
                | E::NonFinite(_)
                | E::ConvergenceFailure(_)
                | E::NoConvergence(_) => 3,
                E::InvalidRho(_) | E::InvalidParameter(_) | E::RankTooLarge { .. } => 1,
                _ => 2,
            },
            _ => 2,
        }
    }
}

/// Attaches a context string to core results.
pub trait CoreContext<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> CoreContext<T> for clm_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| PipelineError::core(what(), e))
    }
}
