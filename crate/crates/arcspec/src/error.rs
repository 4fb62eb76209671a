//! Application errors with the CLI exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("acceptance check failed: {0}")]
    Strict(String),
}

impl From<arcspec_core::Error> for AppError {
    fn from(e: arcspec_core::Error) -> Self {
        AppError::Solver(e.to_string())
    }
}

impl AppError {
    /// Exit code: 2 config error, 3 solver or IO failure, 4 strict
    /// acceptance failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Solver(_) | AppError::Io(_) => 3,
            AppError::Strict(_) => 4,
        }
    }

    /// Machine-readable single-line JSON error record.
    pub fn record(&self) -> String {
        let kind = match self {
            AppError::Config(_) => "config",
            AppError::Solver(_) => "solver",
            AppError::Io(_) => "io",
            AppError::Strict(_) => "strict",
        };
        serde_json::json!({ "error": kind, "message": self.to_string() }).to_string()
    }
}
