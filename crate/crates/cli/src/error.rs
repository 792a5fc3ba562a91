use std::path::PathBuf;

use bias_design::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    NotConverged(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io { .. } => 6,
            CliError::NotConverged(_) => 4,
            CliError::Core(e) => match e {
                CoreError::SingularMatrix | CoreError::IllConditioned(_) => 3,
                CoreError::NoConvergence { .. } => 4,
                CoreError::GraphTooLarge(_) | CoreError::DimensionTooLarge(_) => 5,
                _ => 2,
            },
        }
    }

    /// Short category tag printed ahead of the message on standard error.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            3 => "singular",
            4 => "no-convergence",
            5 => "size-cap",
            6 => "io",
            _ => "input",
        }
    }
}
