use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("invalid {field}: {reason}")]
    Invariant { field: String, reason: String },

    #[error("enumerating all patterns for {cells} cells would produce 2^{cells} rows (cap {cap}); use a preselection strategy instead")]
    PatternCap { cells: usize, cap: usize },

    #[error("lp: {0}")]
    Lp(String),

    #[error("solver stalled after {iterations} simplex iterations: {detail}")]
    Stall { iterations: usize, detail: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("rate cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invariant(field: &str, reason: impl Into<String>) -> Self {
        Error::Invariant {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
