use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("invalid patch: {0}")]
    InvalidPatch(String),

    #[error("singular geometry in patch {patch} at ({x}, {y})")]
    SingularGeometry { patch: usize, x: f64, y: f64 },

    #[error("open surface: {0}")]
    OpenSurface(String),

    #[error("incompatible interface: {0}")]
    IncompatibleInterface(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("indefinite operator detected at iteration {iteration} (p'Ap = {curvature:e})")]
    IndefiniteOperator { iteration: usize, curvature: f64 },

    #[error("degenerate operator: non-positive diagonal entry in row {row} on level {level}")]
    DegenerateOperator { level: usize, row: usize },

    #[error("shifted solve {index} failed: {source}")]
    ShiftedSolve {
        index: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
