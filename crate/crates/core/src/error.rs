use thiserror::Error;

/// Errors raised by model construction and evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel parameters p={p}, r={r}: {reason}")]
    InvalidChannel { p: f64, r: f64, reason: &'static str },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("invalid delay distribution: {0}")]
    InvalidDelay(String),

    #[error("user index {user} out of range for {users} users")]
    UnknownUser { user: usize, users: usize },

    #[error("feedback from slot {origin} cannot be used at slot {slot} (horizon {horizon})")]
    InvalidFeedbackSlot { origin: u32, slot: u32, horizon: u32 },

    #[error("schedule order vector requires positively correlated channels (p > r)")]
    NotPositivelyCorrelated,

    #[error("alpha policy requires {0}")]
    AlphaPolicy(&'static str),

    #[error("instance too large for exact evaluation: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown policy `{0}` (expected greedy | greedy-queue | random | fixed:<i> | alpha:<a1,a2,a3,a4>)")]
    UnknownPolicy(String),

    #[error("invalid instance for this operation: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(x: f64) -> Result<f64> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::ProbabilityOutOfRange(x))
    }
}
