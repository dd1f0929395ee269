use thiserror::Error;

/// Errors raised by the solvers, environments and learners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("{solver} did not converge within {cap} sweeps (input is likely non-communicating or periodic)")]
    NonConvergence { solver: &'static str, cap: usize },

    #[error("policy evaluation did not converge within {cap} sweeps: the induced chain is not unichain")]
    NotUnichain { cap: usize },

    #[error("step {t} is outside the horizon [1, {horizon}]")]
    StepOutOfRange { t: usize, horizon: usize },

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("snapshot at step {t} is not communicating")]
    NotCommunicating { t: usize },

    #[error("generation failed after {attempts} resampling attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("refusing {what}: {count} exceeds the cap of {cap}")]
    TooExpensive { what: &'static str, count: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("record does not match environment: {0}")]
    LengthMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
