use thiserror::Error;

/// Errors raised by the controller, its solvers and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cost matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("time {t} outside trajectory horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("degenerate linear system: {0}")]
    Singular(&'static str),

    #[error("plant state diverged at t = {time} s (|i| = {magnitude} A)")]
    Diverged { time: f64, magnitude: f64 },

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
