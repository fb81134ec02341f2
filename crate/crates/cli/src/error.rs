use std::fmt;

use manimet_core::Error;

/// A failed command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, manifest keys or paths.
    Usage(String),
    Core(Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e {
                Error::Divergence { .. } => EXIT_DIVERGENCE,
                Error::DegenerateJacobian { .. }
                | Error::NonFinite(_)
                | Error::Estimation(_)
                | Error::Training(_) => EXIT_NUMERICAL,
                Error::Dimension { .. }
                | Error::Capability(_)
                | Error::IndexSet(_)
                | Error::InvalidArgument(_)
                | Error::Format(_)
                | Error::Io(_) => EXIT_USAGE,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}
