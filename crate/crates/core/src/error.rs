use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("potential is not at critical coupling: {0}")]
    NotCritical(String),

    #[error("no coupling B <= {cap} restores criticality at lambda = {lambda}; shrink lambda")]
    NonPerturbative { lambda: f64, cap: f64 },

    #[error("no admissible candidate at growth step {step}")]
    NoAdmissibleCandidate { step: usize },

    #[error("ground level degenerate: gap {gap:e} below {threshold:e}")]
    Degenerate { gap: f64, threshold: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
