//! Error type carrying the process exit code.
//!
//! Usage and validation problems (bad flags, missing or malformed inputs,
//! unreadable checkpoints) exit 2; failures while computing or writing
//! results exit 1. Every failure prints one structured JSON line on stderr.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or invalid inputs; exit code 2.
    Usage(String),
    /// Failure during execution; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

/// Maps write failures to runtime errors with the path in the message.
pub fn io_runtime(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::runtime(format!("cannot write {}: {e}", path.display()))
}
