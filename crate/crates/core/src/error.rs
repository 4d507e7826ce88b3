use thiserror::Error;

/// Errors produced by the beamforming library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("rank error: {streams} streams requested but only {available} independent directions available")]
    Rank { streams: usize, available: usize },

    #[error("insufficient null space: {free_dims} interference-free dimensions for {streams} streams")]
    InsufficientNullSpace { free_dims: usize, streams: usize },

    #[error("infeasible: interference cap {xi:.6e} is below the minimum achievable interference {xi_min:.6e}")]
    Infeasible { xi: f64, xi_min: f64 },

    #[error("tolerance not reached: {0}")]
    Tolerance(String),

    #[error("oracle found no feasible point within {budget} restarts")]
    OracleNoFeasiblePoint { budget: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
