use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite response at omega = {omega} rad/s")]
    NonFinite { omega: f64 },

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("rational degree {degree} exceeds cap {cap}; lower the Oustaloup or Pade order")]
    DegreeCap { degree: usize, cap: usize },

    #[error("dt = {dt} too large for stiffest mode |lambda| = {lambda:.4e}; reduce dt to at most {suggested:.4e}")]
    StiffStep { dt: f64, lambda: f64, suggested: f64 },

    #[error("realization failed: {0}")]
    Realization(String),

    #[error("no stable candidate found across {starts} starts")]
    NoStableCandidate { starts: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
