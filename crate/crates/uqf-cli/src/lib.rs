//! Command implementations behind the `uqf` binary.
//!
//! Commands: `sample` (episodes to JSON-lines), `learn` (UQF model from
//! episodes), `eval` (Monte-Carlo returns to CSV), `curve` (size × seed
//! learning-curve sweep) and `selfcheck` (oracle equivalence suite).
//! Everything is deterministic given the config; curve CSVs are
//! byte-identical across runs.

pub mod commands;
pub mod config;
pub mod envref;

use std::fmt;

/// Exit code classes: 2 config error, 3 learning error, 4 IO error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Learning,
    Io,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Learning => 3,
            ExitKind::Io => 4,
        }
    }
}

/// A command failure carrying its exit class.
#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn config(err: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Config,
            message: err.to_string(),
        }
    }

    pub fn learning(err: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Learning,
            message: err.to_string(),
        }
    }

    pub fn io(err: impl fmt::Display) -> Self {
        CliError {
            kind: ExitKind::Io,
            message: err.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
