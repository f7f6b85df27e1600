use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: wavepath::Error,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Attaches a short description of the failing step to a library error.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for wavepath::Result<T> {
    fn context(self, what: &str) -> Result<T, CliError> {
        self.map_err(|source| match source {
            wavepath::Error::Config { field, reason } => CliError::Config {
                path: format!("{what}.{field}"),
                message: reason,
            },
            source => CliError::Module {
                context: what.to_string(),
                source,
            },
        })
    }
}
