use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("{path}: line {line}: {message}")]
    MeshParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("facet labelling failed: {0}")]
    Labels(String),

    #[error("quadrature of exactness degree {requested} is not available (max {max})")]
    QuadratureDegree { requested: usize, max: usize },

    #[error("boundary conditions: {0}")]
    BoundaryConditions(String),

    #[error("local interior block of element {element} could not be factorized")]
    LocalFactorization { element: usize },

    #[error("singular pivot at row {row}")]
    SingularPivot { row: usize },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("iterative solver stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("step residual {residual:e} exceeds tolerance {tolerance:e} at t = {time}")]
    StepResidual {
        residual: f64,
        tolerance: f64,
        time: f64,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error("time stamp mismatch: state at t = {state}, requested t = {requested}")]
    TimeMismatch { state: f64, requested: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
