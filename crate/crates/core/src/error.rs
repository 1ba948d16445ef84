use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("asymptotic fit failed: {0}")]
    Fit(String),

    #[error("quadrature did not converge after M = {points} points (last change {change:e})")]
    Quadrature { points: usize, change: f64 },

    #[error("degenerate fit: only {usable} usable points, need {needed}")]
    DegenerateFit { usable: usize, needed: usize },

    #[error("inadmissible parameters: {0}")]
    Admissibility(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("sampling criterion violated: {0}")]
    Sampling(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("gaussian oracle breakdown: Re a = {re_a:e} after step {step}")]
    OracleBreakdown { step: usize, re_a: f64 },

    #[error("evolution aborted at t = {last_good_time}: {reason}")]
    EvolutionAbort { last_good_time: f64, reason: String },

    #[error("config error in field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
