use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid swap selection: {0}")]
    InvalidSwap(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole at s = {s}: {context}")]
    Pole { s: Complex64, context: String },

    #[error("|Im s| = {height} exceeds the supported height {max}")]
    HeightExceeded { height: f64, max: f64 },

    #[error("singular point s = {s}: {context}")]
    Singularity { s: Complex64, context: String },

    #[error("memory budget exceeded: need {requested} bytes, budget is {budget} bytes")]
    Resource { requested: u64, budget: u64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("truncation too short: {0}")]
    Truncation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    Checksum {
        path: String,
        expected: String,
        found: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
