use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("policy is not a probability vector (sum = {sum})")]
    InvalidPolicy { sum: f64 },

    #[error("action {action} out of range for {num_actions} actions")]
    InvalidAction { action: usize, num_actions: usize },

    #[error("serving SBS {0} cannot be in its own interferer set")]
    SelfInterference(usize),

    #[error("cache update infeasible: update takes {tau_slots} slots but epoch is only {epoch_slots}")]
    InfeasibleUpdate { tau_slots: f64, epoch_slots: u64 },

    #[error("eigensolver failed to converge on a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed record at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
