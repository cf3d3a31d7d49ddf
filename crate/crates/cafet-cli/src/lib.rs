//! Command implementations behind the `cafet` binary: simulation grids,
//! dataset accuracy tests, panel diagnostics, and variance-constant
//! calibration.

pub mod commands;
pub mod config;
pub mod report;

use cafet_core::Error as CoreError;

/// CLI-level error with a process exit class.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or flags (exit code 2).
    Config(String),
    /// Bad or missing input data (exit code 3).
    Data(String),
    /// Numerical degeneracy (exit code 4).
    Numerical(String),
}

impl CliError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Data(_) | CoreError::Io(_) | CoreError::Csv(_) => {
                CliError::Data(err.to_string())
            }
            CoreError::InvalidTuning(_) => CliError::Config(err.to_string()),
            _ => CliError::Numerical(err.to_string()),
        }
    }
}
