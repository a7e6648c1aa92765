use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HBayesError>;

#[derive(Debug, Error)]
pub enum HBayesError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical failure{}: {message}", .iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    Numerical {
        message: String,
        iteration: Option<usize>,
    },

    #[error("{}:{line}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("checkpoint schema version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HBayesError {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        HBayesError::Numerical {
            message: message.into(),
            iteration: None,
        }
    }

    /// Tags a numerical failure with the sweep in which it happened.
    pub fn at_iteration(self, iteration: usize) -> Self {
        match self {
            HBayesError::Numerical { message, .. } => HBayesError::Numerical {
                message,
                iteration: Some(iteration),
            },
            other => other,
        }
    }
}
