use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing {}: run `{producer}` first", path.display())]
    Missing { path: PathBuf, producer: &'static str },

    #[error("{0}")]
    Stale(String),

    #[error(transparent)]
    Core(#[from] gram_mover::Error),

    #[error("{path}: {source}", path = path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Core(gram_mover::Error::Config(_)) => ExitCode::from(2),
            CliError::Missing { .. } | CliError::Stale(_) => ExitCode::from(3),
            _ => ExitCode::from(1),
        }
    }
}
