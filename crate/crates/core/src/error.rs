use thiserror::Error;

use crate::config::ConfigError;
use crate::controller::ControllerError;
use crate::dynamics::DynamicsError;
use crate::graph::GraphError;
use crate::ppf::FunnelViolation;
use crate::sim::SimError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for anything that can go wrong between reading a
/// scenario and writing its outputs.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Funnel(#[from] FunnelViolation),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown example `{0}` (expected example1 or example2)")]
    UnknownExample(String),
}

/// Coarse failure classes. Each maps to a distinct process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorCategory {
    Config,
    Graph,
    Filter,
    FunnelViolation,
    Numerical,
    Model,
    Io,
    UnknownExample,
}

impl ErrorCategory {
    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Graph => "graph",
            ErrorCategory::Filter => "filter",
            ErrorCategory::FunnelViolation => "funnel_violation",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Model => "model",
            ErrorCategory::Io => "io",
            ErrorCategory::UnknownExample => "unknown_example",
        }
    }

    /// Exit code used by the command-line tool. 1 is reserved for a run that
    /// finished but failed its verdict, 2 for argument errors.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 3,
            ErrorCategory::Graph => 4,
            ErrorCategory::Filter => 5,
            ErrorCategory::FunnelViolation => 6,
            ErrorCategory::Numerical => 7,
            ErrorCategory::Model => 8,
            ErrorCategory::Io => 9,
            ErrorCategory::UnknownExample => 10,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Graph(_) => ErrorCategory::Graph,
            Error::Funnel(_) => ErrorCategory::FunnelViolation,
            Error::Controller(e) => e.category(),
            Error::Dynamics(_) => ErrorCategory::Model,
            Error::Sim(e) => e.category(),
            Error::Config(e) => e.category(),
            Error::Io { .. } => ErrorCategory::Io,
            Error::UnknownExample(_) => ErrorCategory::UnknownExample,
        }
    }
}
