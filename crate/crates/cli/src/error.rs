use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Solver(#[from] ghft::Error),
    #[error("ground state not converged (residual {residual:.3e} after {iterations} iterations)")]
    NotConverged { residual: f64, iterations: usize },
    #[error("ground state not converged for {0}")]
    SweepNotConverged(String),
    #[error("covariance file was computed for parameter hash {found}, configuration hashes to {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Solver(_) => 1,
            CliError::NotConverged { .. } | CliError::SweepNotConverged(_) => 4,
            CliError::HashMismatch { .. } => 5,
            CliError::Verification(_) => 6,
        })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
