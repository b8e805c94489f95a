use thiserror::Error;

/// Errors raised by the numerical kernels, optimizers and certificates.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty probability vector")]
    Empty,

    #[error("entry {index} has value {value}, below the allowed tolerance")]
    NegativeMass { index: usize, value: f64 },

    #[error("entry {index} is not a finite number ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("sum {sum} deviates from 1")]
    SumDeviation { sum: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("q({index}) = 0 while p({index}) > 0: divergence is infinite")]
    SupportViolation { index: usize },

    #[error("binary input alphabet required, channel has {found} inputs")]
    NonBinaryInput { found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point is on the boundary of the simplex: {0}")]
    BoundaryPoint(String),

    #[error("channel entry {which}[{row}][{col}] is zero; positive entries are required")]
    ZeroChannelEntry {
        which: &'static str,
        row: usize,
        col: usize,
    },

    #[error("point is not stationary: gradient norm {norm:e} exceeds {tol:e}")]
    NotStationary { norm: f64, tol: f64 },

    #[error("wrong boundary pattern: {0}")]
    WrongBoundaryPattern(String),

    #[error("gate table does not map into the declared X alphabet: {0}")]
    InvalidGate(String),

    #[error("empty feasible region: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
