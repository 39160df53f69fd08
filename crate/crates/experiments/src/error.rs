use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerics(#[from] qillum::Error),

    #[error("{0}")]
    Failed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExpError {
    /// Process exit code: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) => 2,
            ExpError::Numerics(qillum::Error::InvalidArgument(_)) => 2,
            ExpError::Numerics(_) | ExpError::Failed(_) => 3,
            ExpError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        ExpError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExpError>;

pub(crate) fn config(msg: impl Into<String>) -> ExpError {
    ExpError::Config(msg.into())
}
