use std::fmt;

use qiopa_core::QiopaError;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<QiopaError> for CliError {
    fn from(e: QiopaError) -> Self {
        match e {
            QiopaError::NonConvergence { .. }
            | QiopaError::NegativeEigenvalue(_)
            | QiopaError::NotBlockDiagonal
            | QiopaError::NonUnitary(_)
            | QiopaError::UndefinedRatio => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
