use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("point ({x}, {y}) lies outside the window")]
    PointOutsideWindow { x: f64, y: f64 },

    #[error("location ({x}, {y}) lies outside the extent of raster `{name}`")]
    OutsideRaster { name: String, x: f64, y: f64 },

    #[error("covariate `{0}` is not among the supplied fields")]
    MissingCovariate(String),

    #[error("raster `{name}` does not cover the window")]
    RasterDoesNotCover { name: String },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design column `{0}` is degenerate")]
    DegenerateColumn(String),

    #[error("numeric range error: {0}")]
    NumericRange(String),

    #[error("design is rank deficient: {0}")]
    RankDeficient(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        last: Vec<f64>,
    },

    #[error("outer iterations oscillate between iterates")]
    Oscillation { last: Vec<f64> },

    #[error("the pattern has no points; the normalizer N(D) is zero")]
    EmptyPattern,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex stalled after {0} pivots")]
    SimplexStall(usize),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("study failed: {failed} of {total} replicates failed")]
    StudyFailed { failed: usize, total: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
