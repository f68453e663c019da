use thiserror::Error;

use crate::linalg::CVector;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value was rejected. `key` names the offending field.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// The configuration document could not be parsed at all.
    #[error("malformed configuration: {0}")]
    ConfigSyntax(String),

    /// The power-dual system is singular at zero dual and needs `λ0 > 0`.
    #[error("beamformer system is singular at zero power dual")]
    NeedsPositiveDual,

    #[error("numerical failure in {stage}: {reason}")]
    Numerical { stage: &'static str, reason: String },

    /// The IRC ellipsoid solve hit its iteration cap. `best` is the best
    /// feasible point found.
    #[error("ellipsoid method stopped after {iterations} iterations with duality gap {gap:e}")]
    EllipsoidCap {
        iterations: usize,
        gap: f64,
        best: Box<CVector>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(stage: &'static str, reason: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            reason: reason.into(),
        }
    }
}
