use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("MissingReport: no report files found under {0}")]
    MissingReport(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: hmhf_core::Error,
    },
    #[error("plot {0}: {1}")]
    Plot(String, String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Attaches a short description of the failing step to core errors.
pub trait Context<T> {
    fn ctx(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, hmhf_core::Error> {
    fn ctx(self, what: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what.to_string(),
            source,
        })
    }
}
