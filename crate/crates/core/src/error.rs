use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported spatial dimension {0} (expected 1, 2 or 3)")]
    Dimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no equilibrium exists: {0}")]
    NoEquilibrium(String),

    #[error("numerical method did not converge: {0}")]
    Convergence(String),

    #[error("particle {index} left the computational box at step {step}")]
    ParticleEscaped { index: usize, step: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("unknown {kind} \"{name}\" (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
