use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("action rejected: {0}")]
    InvalidAction(String),

    #[error("step called on a terminal simulator")]
    StepAfterTerminal,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("step index {t} exceeds horizon {horizon}")]
    StepBeyondHorizon { t: usize, horizon: usize },

    #[error("missing {0} heuristic value")]
    MissingHeuristic(&'static str),

    #[error("action source exhausted after {0} steps before the trajectory terminated")]
    ActionsExhausted(usize),

    #[error("covariance is not positive-definite")]
    NotPositiveDefinite,

    #[error("solver budget exhausted without a completed rollout")]
    NoCompletedRollout,

    #[error("sampling distribution collapsed at generation {generation} (max std {max_std:e})")]
    DegenerateDistribution { generation: usize, max_std: f64 },

    #[error("exhaustive enumeration requires a finite discrete action space")]
    NotDiscrete,

    #[error("instance too large to enumerate: {actions}^{horizon} sequences exceed {limit}")]
    InstanceTooLarge {
        actions: usize,
        horizon: usize,
        limit: u64,
    },

    #[error("solver requires {expected} actions, scenario provides {found}")]
    ActionModeMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("at least two aircraft are required, found {0}")]
    TooFewAircraft(usize),

    #[error("trajectory log: {0}")]
    Log(String),
}
