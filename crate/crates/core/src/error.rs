use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("waveforms are sampled on different time grids")]
    GridMismatch,

    #[error("integration window captures no probability mass (acceptance {acceptance:e})")]
    EmptyWindow { acceptance: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("time grid too coarse: dt = {dt:e} s exceeds {max:e} s")]
    Resolution { dt: f64, max: f64 },

    #[error("state has zero norm after post-selection")]
    DegenerateState,

    #[error("measurement schedule is not informationally complete (rank {rank} of 16)")]
    RankDeficient { rank: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Config(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by invalid user input rather than I/O failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
