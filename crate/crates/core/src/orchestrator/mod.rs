//! Lease calendar, experiment lifecycle and the two-tier wireless guard.
//!
//! All state changes are appended to an ordered [`Record`] log; an
//! [`Orchestrator`] can be rebuilt exactly by replaying it, which is how
//! the JSON-lines calendar file is persisted between CLI invocations.

mod calendar;
mod fuzz;
mod guard;
mod types;

pub use calendar::{Orchestrator, OrchestratorConfig, Record};
pub use fuzz::{admission_fuzz, guard_fuzz, random_request, AdmissionReport, GuardReport};
pub use guard::{guard_check_config, GuardDecision, Observation, RadioConfigRequest};
pub use types::{
    Conflict, DenyReason, EmissionPhase, ExpState, Experiment, ExperimentSpec, GuardEvent, GuardKind, Lease,
    LeaseRequest, LeaseState, LifecycleEvent, ResourceId, SpectrumDecl,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid request: {0}")]
    Validation(String),
    #[error("conflict: {0}")]
    Conflict(Conflict),
    #[error("lease {id} is {state:?}, not active")]
    LeaseNotActive { id: u64, state: LeaseState },
    #[error("unknown lease {0}")]
    UnknownLease(u64),
    #[error("unknown experiment {0}")]
    UnknownExperiment(u64),
    #[error("calendar log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
