use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("deformation parameter must satisfy 0 < q < 1, got {0}")]
    InvalidQ(f64),
    #[error("tolerance `{name}` must be strictly positive, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("operators live on different truncations ({left} vs {right})")]
    TruncationMismatch { left: String, right: String },
    #[error("q-number [{0}] requested for a negative integer")]
    NegativeQNumber(i64),
    #[error("Hurwitz offset must be positive, got {0}")]
    InvalidOffset(f64),
    #[error("cochain of arity {expected} applied to {got} arguments")]
    ArityMismatch { expected: usize, got: usize },
    #[error("symbol of `{0}` has nonzero winding after grade-zero extraction")]
    NonZeroWinding(String),
    #[error("no symbol available for {0}")]
    SymbolUnavailable(String),
    #[error("{what} did not converge: last increment {increment:e} exceeds {tolerance:e}")]
    NonConvergent {
        what: String,
        increment: f64,
        tolerance: f64,
    },
    #[error("fit residual {residual:e} above tolerance {tolerance:e} for {what}")]
    FitResidual {
        what: String,
        residual: f64,
        tolerance: f64,
    },
    #[error("index routes disagree: {0}")]
    RouteDisagreement(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
