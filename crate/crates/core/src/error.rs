use thiserror::Error;

/// Errors produced by the numerical layers of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate form: {0}")]
    DegenerateForm(String),

    #[error("expression parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("asymmetric {what} at t = {t}")]
    Asymmetric { t: f64, what: String },

    #[error("singular {what} at t = {t}")]
    Singular { t: f64, what: String },

    #[error("integration failure: {0}")]
    Integration(String),

    #[error("endpoint focal: t = b = {0} is a focal instant")]
    EndpointFocal(f64),

    #[error("endpoint conjugate for the reduced system: t = b = {0}")]
    EndpointConjugate(f64),

    #[error("unresolved cluster of focal instants near t = {t}; refine the scan mesh")]
    UnresolvedCluster { t: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
