use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix shape {n}x{p}")]
    InvalidShape { n: usize, p: usize },

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid cluster caps K={k}, H={h} for a {n}x{p} matrix")]
    InvalidCaps { n: usize, p: usize, k: usize, h: usize },

    #[error("labels use {used} clusters but the cap is {cap}")]
    TooManyClusters { used: usize, cap: usize },

    #[error("projection of dimension {dim} exceeds the materialization limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("residual vector is zero: data are exactly block-constant under the selected structure")]
    DegenerateResidual,

    #[error("invalid cooling schedule: {0}")]
    InvalidSchedule(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("truncation set carries no probability mass")]
    ZeroMass,

    #[error("{0} failed to converge")]
    Convergence(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
