use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemiDefinite { eigenvalue: f64 },

    #[error("non-positive diagonal entry {value:e} at index {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("too few samples: {n} (need at least 2)")]
    TooFewSamples { n: u64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid cluster: {0}")]
    InvalidCluster(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unknown measure `{0}` (expected one of B, JS, W, eGauss, aB, O, Oh)")]
    UnknownMeasure(String),

    #[error("pair ({i}, {j}): {source}")]
    Pair {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("group {group}: {source}")]
    Group {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
