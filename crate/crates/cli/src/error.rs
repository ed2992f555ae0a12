use std::fmt;
use std::process::ExitCode;

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configs or input files: exit 2.
    Usage(String),
    /// Output could not be written: exit 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Io(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Classifies library errors by the stage they happened in.
pub trait Stage<T> {
    /// Reading or validating inputs: always a usage error.
    fn input(self) -> CliResult<T>;
    /// Writing outputs: filesystem failures are IO errors.
    fn output(self) -> CliResult<T>;
}

impl<T> Stage<T> for txnforge::Result<T> {
    fn input(self) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(e.to_string()))
    }

    fn output(self) -> CliResult<T> {
        self.map_err(|e| {
            if e.is_io() {
                CliError::Io(e.to_string())
            } else {
                CliError::Usage(e.to_string())
            }
        })
    }
}
