use thiserror::Error;

use crate::setup::ThresholdReport;
use crate::variational::Solution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field length {actual} does not match grid size {expected}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("field contains a non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("right-hand side has mean {mean:e}, exceeding tolerance {tol:e}")]
    NonZeroMeanRhs { mean: f64, tol: f64 },

    #[error("vortex point {index} at ({x}, {y}) lies outside the domain")]
    PointOutsideDomain { index: usize, x: f64, y: f64 },

    #[error("exponent argument {argument:e} exceeds the overflow guard")]
    Overflow { argument: f64 },

    #[error("no solution exists: threshold violated (margin {})", .0.margin)]
    ThresholdViolated(Box<ThresholdReport>),

    #[error("solver did not converge: {reason}")]
    NotConverged { reason: String, best: Box<Solution> },

    #[error("decay annulus too thin: {bins} radial bins (need at least 8)")]
    AnnulusTooThin { bins: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
