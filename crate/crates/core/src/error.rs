use thiserror::Error;

/// Errors raised by the numerical routines and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("spectral density must be finite and nonnegative, got {value} at node {index}")]
    InvalidDensity { index: usize, value: f64 },

    #[error("degenerate spectral measure: {0}")]
    DegenerateMeasure(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("function does not vanish at the truncation point: |f(x_max)| = {value:e} > {tol:e}")]
    SupportViolation { value: f64, tol: f64 },

    #[error("grid too small: need at least {min} nodes, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("eigenfunction column {column} overflowed during integration")]
    InvalidColumn { column: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("kernel march became unstable near x = {x}")]
    Unstable { x: f64 },

    #[error("regularization width must be positive, got {0}")]
    InvalidRegularization(f64),

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("evaluation point {0} is not strictly inside the contour")]
    OutsideContour(num_complex::Complex64),

    #[error("operator evaluation failed: {0}")]
    Evaluation(String),

    #[error("probe location {0} is too close to the boundary")]
    ProbeOutOfRange(f64),

    #[error("type estimate needs {0}")]
    TypeFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
