use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("event cap of {cap} exceeded before absorption")]
    CapExceeded { cap: u64 },
    #[error("{what}: retry budget exhausted after {attempts} attempts ({accepted} accepted, rate {rate:.3e})")]
    RetriesExhausted {
        what: String,
        attempts: u64,
        accepted: u64,
        rate: f64,
    },
    #[error("beyond radius of convergence at z = {z} (level {level})")]
    BeyondRadius { z: f64, level: usize },
    #[error("divergent tail at lambda = {lambda} (level {level})")]
    DivergentTail { lambda: f64, level: usize },
    #[error("depth cap {depth} reached with gap {gap:.3e} above tolerance")]
    DepthExhausted { depth: usize, gap: f64 },
    #[error("bracket search failed: {0}")]
    Bracket(String),
    #[error("acceptance probability {prob:.3e} for {what} is below the rejection floor")]
    LowAcceptance { what: String, prob: f64 },
    #[error("structural error: {0}")]
    Structure(String),
}

impl Error {
    /// True for failures of numerical routines (poles, depth caps, retries).
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParams(_) | Error::InvalidArgument(_) | Error::Structure(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
