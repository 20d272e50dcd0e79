use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("system of {sites} sites exceeds the dense limit of {limit}")]
    TooLarge { sites: usize, limit: usize },

    #[error("single-qubit basis rotation on site {site} is not unitary (deviation {deviation:e})")]
    NonUnitary { site: usize, deviation: f64 },

    #[error("basis covers {got} sites, model has {expected}")]
    BasisSize { expected: usize, got: usize },

    #[error("{samples} samples cannot fill {bins} bins")]
    TooFewSamples { samples: u64, bins: usize },

    #[error("percent error against a zero reference")]
    ZeroReference,

    #[error("enumeration of {nodes} configurations is infeasible")]
    Infeasible { nodes: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
