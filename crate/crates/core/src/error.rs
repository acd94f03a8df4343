use thiserror::Error;

/// Errors raised by the dissemination solvers and simulators.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid instance: {field}: {reason}")]
    InvalidInstance { field: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),

    #[error("schedule has no uploads")]
    EmptySchedule,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("search budget exceeded after {nodes} nodes")]
    BudgetExceeded { nodes: u64 },

    #[error("instance exceeds size guard: {0}")]
    SizeGuard(String),

    #[error("degenerate fluid instance: {0}")]
    DegenerateInstance(String),

    #[error("capacity reduction does not apply: {0}")]
    NotCase2(String),

    #[error("state {state} is absorbing before full dissemination")]
    AbsorbingBeforeTarget { state: usize },

    #[error("regression design is degenerate: {0}")]
    DegenerateDesign(String),
}

pub type Result<T> = std::result::Result<T, Error>;
