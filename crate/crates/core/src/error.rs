use thiserror::Error;

/// Failures surfaced by the detection toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample set is empty")]
    EmptySample,

    #[error("sample contains a non-finite value ({0})")]
    NonFinite(f64),

    #[error("{name} = {value} is outside {allowed}")]
    Domain {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("sequence of length {len} is too short for window {window} (need at least {needed})")]
    SequenceTooShort {
        len: usize,
        window: usize,
        needed: usize,
    },

    #[error("unsupported distribution spec: {0}")]
    Unsupported(String),

    #[error("evaluation dataset contains no true change points")]
    DegenerateEval,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short machine-readable tag for the failure class.
    pub fn category(&self) -> &'static str {
        match self {
            Error::EmptySample | Error::NonFinite(_) | Error::Domain { .. } => "domain",
            Error::SizeMismatch { .. } => "contract",
            Error::SequenceTooShort { .. } => "short-sequence",
            Error::Unsupported(_) => "unsupported",
            Error::DegenerateEval => "degenerate-eval",
            Error::InvalidParameter(_) => "invalid-parameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
