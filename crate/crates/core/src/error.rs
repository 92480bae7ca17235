use thiserror::Error;

use crate::mapping::MatchingReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid drive: {0}")]
    InvalidDrive(String),

    #[error("invalid device parameter: {0}")]
    InvalidDevice(String),

    #[error("weight {weight} outside representable range [-{limit}, {limit}]")]
    WeightOutOfRange { weight: f64, limit: f64 },

    #[error("invalid weight codec: {0}")]
    InvalidCodec(String),

    #[error("input {0} outside [-1, 1] (or pulse outside [0, x_max])")]
    InputOutOfRange(f64),

    #[error("column has no rows")]
    EmptyColumn,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("matching constraint violated:\n{0}")]
    MatchingViolated(MatchingReport),

    #[error("time {t} outside [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("non-finite result: {0}")]
    Numeric(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::WeightOutOfRange { .. } | Error::MatchingViolated(_) => 3,
            Error::Numeric(_) => 4,
            _ => 2,
        }
    }
}
