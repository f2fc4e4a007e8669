use std::fmt;

/// Command failure, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid input or configuration. Exit code 2.
    Input(String),
    /// A statistical precondition failed at run time (reference overlap too
    /// small). Exit code 3.
    Statistical(String),
    /// Anything else. Exit code 1.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Statistical(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Statistical(m) => write!(f, "statistical failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qmelab::Error> for CliError {
    fn from(e: qmelab::Error) -> Self {
        match e {
            qmelab::Error::OverlapTooSmall { .. } => CliError::Statistical(format!(
                "{e}; choose a reference point closer to the data (--reference)"
            )),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
