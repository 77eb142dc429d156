use std::fmt;
use std::process::ExitCode;

use warnforge::analyzers::AnalyzerError;
use warnforge::config::ConfigError;
use warnforge::gateway::GatewayError;

/// Process exit statuses. The numeric values are part of the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    /// The run finished but some items failed (extraction, fix validation).
    Failures = 1,
    Usage = 2,
    /// A tool, endpoint or cache entry the run needs is unavailable.
    Environment = 3,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        ExitCode::from(s as u8)
    }
}

/// An error that ends the command with a specific status.
#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            status: Status::Usage,
            message: message.into(),
        }
    }

    pub fn env(message: impl fmt::Display) -> Failure {
        Failure {
            status: Status::Environment,
            message: message.to_string(),
        }
    }

    pub fn failed(message: impl Into<String>) -> Failure {
        Failure {
            status: Status::Failures,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        match e {
            ConfigError::MissingLlm(_) => Failure::env(e),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<AnalyzerError> for Failure {
    fn from(e: AnalyzerError) -> Failure {
        match e {
            AnalyzerError::InputMissing { .. } => Failure::usage(e.to_string()),
            _ => Failure::env(e),
        }
    }
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Failure {
        Failure::env(e)
    }
}

pub type CmdResult = Result<Status, Failure>;
