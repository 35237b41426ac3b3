use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is rank deficient (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("frequency {freq} aliases on a grid of {grid_n} points per axis")]
    Aliasing { freq: i64, grid_n: usize },

    #[error("grid size {0} is not a power of two (or too small for the requested levels)")]
    BadGridSize(usize),

    #[error("lambda must be at least 2, got {0}")]
    BadLambda(f64),

    #[error("at least {needed} points are required, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("parameter out of range: {0}")]
    BadRange(String),

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("generating vectors span the zero subspace")]
    ZeroSubspace,

    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),

    #[error("theta must lie in (0, 1], got {0}")]
    BadTheta(f64),

    #[error("weight vector is empty or identically zero")]
    ZeroWeights,

    #[error("sampled index {index} has zero weight ceil(N w^2)")]
    ZeroDivisor { index: usize },

    #[error("invalid composition: {0}")]
    BadComposition(String),

    #[error("solver did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("golfing scheme exceeded {cap} total resamples")]
    TooManyResamples { cap: usize },

    #[error("invalid golfing schedule: {0}")]
    BadSchedule(String),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::BadRange(msg.into())
    }
}
