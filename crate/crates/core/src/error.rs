use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("resolution {resolution} too small: {reason}")]
    ResolutionTooSmall { resolution: f64, reason: String },

    #[error("mask file {path}: line {line}: {message}")]
    MaskFile {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty domain")]
    EmptyDomain,

    #[error("zero field")]
    ZeroField,

    #[error("field does not match grid: {0}")]
    FieldMismatch(String),

    #[error("{solver} did not converge in {iterations} iterations (last residual {residual:.3e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ball of radius {radius} around {center:?} is not contained in D")]
    BallOutsideDomain { center: Vec<f64>, radius: f64 },

    #[error("non-finite objective at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error(
        "relaxed iterate collapsed to zero at iteration {iteration}; parameters violate coercivity"
    )]
    Collapse { iteration: usize },

    #[error("brute-force oracle refused: {nodes} free nodes exceeds the limit of {limit}")]
    OracleTooLarge { nodes: usize, limit: usize },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
