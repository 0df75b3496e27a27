use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("impossible observation: zero evidence for y = {y} at component {index}")]
    ZeroEvidence { index: usize, y: f64 },

    #[error("unsupported channel for {operation}: {channel}")]
    UnsupportedChannel { operation: &'static str, channel: String },

    #[error("saturated regime: q̂_z = {qh_z} >= 1, q_z diverges")]
    Saturated { qh_z: f64 },

    #[error("non-finite iterate at iteration {iteration} in block '{block}'")]
    NonFinite { iteration: usize, block: &'static str },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("spectral term outside its domain: {0}")]
    OutsideDomain(String),

    #[error("threshold not bracketed: {0}")]
    Bracket(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("rate {rate}, trial {trial}: {source}")]
    Trial {
        rate: f64,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
