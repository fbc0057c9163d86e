//! Command-line surface for the WAIC-gated borrowing library: region
//! tables, gating verdicts, posterior summaries, and batch simulations
//! with machine-readable output.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

/// Stable process exit codes.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    /// Usage or validation problem (flags, config schema, domain errors).
    pub const USAGE: i32 = 2;
    /// Numerical-integrity violation detected by the library.
    pub const INTEGRITY: i32 = 3;
    /// Output could not be written.
    pub const IO: i32 = 4;
}

/// An error carrying the exit code it should terminate with.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage_error(message: impl Into<String>) -> CliError {
    CliError {
        code: exit_code::USAGE,
        message: message.into(),
    }
}

pub fn io_error(message: impl Into<String>) -> CliError {
    CliError {
        code: exit_code::IO,
        message: message.into(),
    }
}

/// Map a library error onto the exit-code contract: integrity errors are
/// distinguished from ordinary validation failures.
pub fn from_core(err: wow_core::Error) -> CliError {
    let code = match err {
        wow_core::Error::DisconnectedRegion { .. } => exit_code::INTEGRITY,
        _ => exit_code::USAGE,
    };
    CliError {
        code,
        message: err.to_string(),
    }
}
