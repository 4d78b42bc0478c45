use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lpmax_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("verification failed: {0}")]
    Verify(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Process exit code: 1 for failed verification, 2 for everything
    /// that stops a run from starting or finishing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            _ => 2,
        }
    }
}
