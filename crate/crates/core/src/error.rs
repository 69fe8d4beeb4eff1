use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("matrix is not symmetric positive definite: pivot {pivot} is non-positive")]
    NotSpd { pivot: usize },

    #[error("matrix is not symmetric: |A[{i}][{j}] - A[{j}][{i}]| exceeds tolerance")]
    NotSymmetric { i: usize, j: usize },

    #[error("prolongation operator is rank deficient (column {col})")]
    RankDeficient { col: usize },

    #[error("invalid sample box: lo {lo} >= hi {hi} in dimension {dim}")]
    InvalidBox { dim: usize, lo: f64, hi: f64 },

    #[error("negative standard deviation: {0}")]
    NegativeStd(f64),

    #[error("non-finite value encountered in {context} (layer {layer})")]
    NonFinite { context: &'static str, layer: usize },

    #[error("non-finite gradient encountered at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },

    #[error("no block satisfies the threshold rule: tau {tau} too large for block norms {norms:?}")]
    NoQualifyingBlock { tau: f64, norms: Vec<f64> },

    #[error("boundary rejection sampling accepted {accepted} of {drawn} points (< 1%); geometry is degenerate")]
    DegenerateGeometry { accepted: usize, drawn: usize },

    #[error("unknown problem id {0} (expected 1..=4)")]
    UnknownProblem(usize),

    #[error("unknown architecture name {0:?}")]
    UnknownArchitecture(String),

    #[error("exact solution fails self-consistency: {context} residual {residual:.3e} at ({x:.6}, {y:.6})")]
    SelfConsistency {
        context: &'static str,
        residual: f64,
        x: f64,
        y: f64,
    },

    #[error("batch request of {requested} exceeds pool size {available}")]
    OversizedBatch { requested: usize, available: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
