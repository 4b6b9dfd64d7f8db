use thiserror::Error;

/// Errors raised by scenario loading, trajectory planning and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: usize },

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    #[error("trajectory problem is infeasible")]
    Infeasible,

    #[error("vehicle {vehicle}: trajectory problem is infeasible")]
    VehicleInfeasible { vehicle: usize },

    #[error("degenerate arrival: {0}")]
    DegenerateArrival(String),

    #[error("vehicle stalled before reaching the stop bar")]
    Stalled,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
