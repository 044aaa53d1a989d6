//! Building blocks of the `rankgauge` command-line tool.
//!
//! Exit codes: `0` success, `2` bad input or arguments, `3` the requested
//! level is below what the Monte-Carlo resolution can deliver, `1` anything
//! else.

use std::fmt;

pub mod commands;
pub mod input;
pub mod plot;
pub mod report;

/// A failure mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Infeasible(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Other(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rankgauge::Error> for CliError {
    fn from(e: rankgauge::Error) -> Self {
        use rankgauge::Error as E;
        match e {
            E::ResolutionExhausted { .. } => CliError::Infeasible(e.to_string()),
            E::ConvergenceFailure(_) => CliError::Other(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
