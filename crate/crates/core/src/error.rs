use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("invalid generalized state: {0}")]
    InvalidState(String),
    #[error("no unique first-expiring clock (tie within {tolerance:e})")]
    UniquenessViolation { tolerance: f64 },
    #[error("cannot advance by {requested} time units: first clock expires after {expiry}")]
    AdvanceBeyondExpiry { requested: f64, expiry: f64 },
    #[error("negative or non-finite duration {0}")]
    BadDuration(f64),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("trace exceeded {0} events before reaching the horizon")]
    ZenoGuardExceeded(usize),
    #[error("time {time} lies outside [0, {horizon})")]
    OutOfHorizon { time: f64, horizon: f64 },
    #[error("bad distribution: {0}")]
    BadDistribution(String),
    #[error("infeasible dual witness: {0}")]
    InfeasibleWitness(String),
    #[error("work limit of {0} units exceeded")]
    WorkLimitExceeded(u64),
    #[error("candidate metric is outside the lattice: {0}")]
    NotInLattice(String),
    #[error("horizon {horizon} is shorter than time {time} used by the expression")]
    HorizonTooShort { time: f64, horizon: f64 },
    #[error("invalid expression: {0}")]
    InvalidExpression(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}
