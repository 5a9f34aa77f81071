use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("metric is not positive definite at ({x:.4}, {y:.4}), s = {s:.4}")]
    NotSpd { x: f64, y: f64, s: f64 },

    #[error("eigenvalue collision: operator is near-singular (condition estimate {cond:.3e})")]
    EigenvalueCollision { cond: f64 },

    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),

    #[error("solution leaves the admissible range: |u| = {value:.4} > s_max = {s_max}")]
    OutOfRange { value: f64, s_max: f64 },

    #[error("Newton iteration diverged after {iterations} steps (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("under-resolved oscillation: grid spacing {spacing:.4e} exceeds {limit:.4e}")]
    UnderResolved { spacing: f64, limit: f64 },

    #[error("Neumann series does not contract (ratio {ratio:.3})")]
    SeriesDivergence { ratio: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("loop is not interior: {0}")]
    LoopNotInterior(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
