use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad scenario content or arguments; exit status 2.
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

impl From<xlwifi_core::Error> for CliError {
    fn from(e: xlwifi_core::Error) -> Self {
        match e {
            xlwifi_core::Error::Config { path, msg } => CliError::Config { path, msg },
            xlwifi_core::Error::UndefinedMcs { .. } => CliError::config("mcs", e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
