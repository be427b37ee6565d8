use std::process::ExitCode;

/// CLI failures carry the exit code: 1 usage, 2 data or I/O, 3 solver.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Data(_) => ExitCode::from(2),
            CliError::Solver(_) => ExitCode::from(3),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<fahtp::Error> for CliError {
    fn from(e: fahtp::Error) -> Self {
        match e {
            fahtp::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            fahtp::Error::DegenerateColumn { .. } => CliError::Data(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
