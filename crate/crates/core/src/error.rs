use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("heralding impossible: success probability {p:.3e} is below 1e-15")]
    HeraldImpossible { p: f64 },

    #[error("no transfer maximum found in window [0, {window:.6}]")]
    NoTransferMaximum { window: f64 },

    #[error("insufficient data: {found} usable points, at least {needed} required")]
    InsufficientData { found: usize, needed: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::HeraldImpossible { .. }
                | Error::NoTransferMaximum { .. }
                | Error::InsufficientData { .. }
        )
    }
}
