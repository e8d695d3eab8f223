use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside the covered range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("transition matrix entry ({row}, {col}) = {value:e} is below -1e-10")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("partition has no certified interval mass bound")]
    PartitionNotCertified,

    #[error("cut enumeration supports at most {max} agents, got {n}")]
    TooManyAgents { n: usize, max: usize },

    #[error("pairwise reciprocity violated for {pairs} pair(s)")]
    AssumptionViolated { pairs: usize },

    #[error("partition builder reached the failure case at t_k = {t_k}, candidate = {candidate}")]
    InternalCase0 { t_k: f64, candidate: f64 },

    #[error("trajectory too short: {0}")]
    TrajectoryTooShort(String),

    #[error("step {step} exceeds delta_min / 20 = {limit}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("infeasible scenario: {0}")]
    InfeasibleScenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
