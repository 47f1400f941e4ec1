use std::fmt;

use tnn_core::Error;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_TRAINING: u8 = 4;
pub const EXIT_CHECK: u8 = 5;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: message.into() }
    }

    pub fn training(message: impl Into<String>) -> Self {
        Self { code: EXIT_TRAINING, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Self { code: EXIT_CHECK, message: message.into() }
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Csv(_) | Error::Parse { .. } | Error::Json(_) => EXIT_IO,
            Error::TrainingFailure(_)
            | Error::Divergence { .. }
            | Error::NonFiniteGradient { .. }
            | Error::Numerical { .. } => EXIT_TRAINING,
            _ => EXIT_CONFIG,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
