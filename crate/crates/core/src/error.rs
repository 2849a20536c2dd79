use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain of a physical model, e.g. zero distance.
    #[error("domain error: {0}")]
    Domain(String),

    /// The floor powers needed for the QoS constraints exceed the budget.
    #[error("power budget infeasible: floors need {required} W but only {budget} W available (deficit {deficit} W)")]
    PowerInfeasible {
        required: f64,
        budget: f64,
        deficit: f64,
    },

    /// The propulsion cap admits no speed at all.
    #[error("no admissible speed: propulsion cap {cap} W below minimum power {min_power} W")]
    NoAdmissibleSpeed { cap: f64, min_power: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
