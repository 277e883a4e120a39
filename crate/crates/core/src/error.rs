use thiserror::Error;

use crate::partition::CellId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid action space: {0}")]
    InvalidSpace(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cell {0} is already split")]
    AlreadySplit(CellId),

    #[error("cell {0} is at the deepest representable level")]
    DepthOverflow(CellId),

    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("horizon of {0} rounds is exhausted")]
    HorizonExhausted(u64),

    #[error("a round is already waiting for its reward")]
    RoundPending,

    #[error("no round is waiting for a reward")]
    NoPendingRound,

    #[error("no visited cell to recommend from")]
    NoVisitedCell,

    #[error("action {action:?} outside the admissible range [{low}, {high}]")]
    ActionOutOfRange { action: Vec<f64>, low: f64, high: f64 },

    #[error("integration produced a non-finite state")]
    NonFiniteState,

    #[error("discounted return {value} outside [0, {bound}] at depth {depth}")]
    ReturnOutOfBounds { value: f64, bound: f64, depth: usize },

    #[error("unknown {kind} `{name}` (known: {known})")]
    Unknown { kind: &'static str, name: String, known: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}
