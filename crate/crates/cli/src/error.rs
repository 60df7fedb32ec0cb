use std::path::PathBuf;

/// Everything a command can fail with. The variant decides the exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Input {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

impl From<gainloss_core::Error> for CliError {
    fn from(err: gainloss_core::Error) -> Self {
        if err.is_numerical() {
            CliError::Numerical(err.to_string())
        } else {
            CliError::Invalid(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
