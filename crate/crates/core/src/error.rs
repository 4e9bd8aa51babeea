use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: String,
        needed: f64,
        budget: f64,
    },

    #[error("numerical instability at t = {time}: {detail}")]
    Instability { time: f64, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown estimate id `{0}`")]
    UnknownEstimate(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error JSON and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::Instability { .. } => "instability",
            Error::Degenerate(_) => "degenerate",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::UnknownEstimate(_) => "unknown_estimate",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code: 1 for bad input, 2 for budget or instability aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } | Error::Instability { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
