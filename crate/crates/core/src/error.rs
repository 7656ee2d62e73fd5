use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("distribution length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("stop count {g} out of range [{min}, {max}] for vehicle {vehicle} trajectory {trajectory}")]
    StopOutOfRange {
        vehicle: u32,
        trajectory: usize,
        g: usize,
        min: usize,
        max: usize,
    },

    #[error("unknown vehicle {0}")]
    UnknownVehicle(u32),

    #[error("vehicle {vehicle} has no trajectory {trajectory}")]
    UnknownTrajectory { vehicle: u32, trajectory: usize },

    #[error("vehicle {0} is ineligible: no trajectory can deliver its model (q * q_rcv = 0 everywhere)")]
    Ineligible(u32),

    #[error("aggregation weights of the selected vehicles sum to zero")]
    ZeroWeight,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("instance too large for enumeration: {combinations} combinations (limit {limit})")]
    TooLarge { combinations: f64, limit: f64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing {what} for vehicle {vehicle}")]
    MissingScore { what: &'static str, vehicle: u32 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
