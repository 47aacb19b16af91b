use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed rational `{0}`")]
    Rational(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown file `{0}`")]
    UnknownFile(String),

    #[error("capacity violated at step {time}: {used} > {capacity}")]
    Capacity { time: usize, used: u64, capacity: u64 },

    #[error("zap requested at step {0} but zapping is disabled")]
    ZapDisabled(usize),

    #[error("step {time}: {reason}")]
    InvalidDecision { time: usize, reason: String },

    #[error("constraint cannot be satisfied: every raisable variable is frozen")]
    Unsatisfiable,

    #[error("no reference value for variable {0}")]
    MissingReference(String),

    #[error("instance too large for the exact oracle: {0}")]
    InstanceTooLarge(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("policy `{policy}` does not support this instance: {reason}")]
    Unsupported { policy: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no bound for this row and setting")]
    NoBound,

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
