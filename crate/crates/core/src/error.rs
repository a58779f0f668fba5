use thiserror::Error;

/// Errors produced by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (residue {0:e})")]
    NotHermitian(f64),

    #[error("state has zero or non-finite norm")]
    ZeroNorm,

    #[error("state dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("degenerate dispersion: second central moment {m2:e} at or below threshold {threshold:e}")]
    DegenerateDispersion { m2: f64, threshold: f64 },

    #[error("degenerate speed: v = {v:e} at or below threshold {threshold:e}")]
    DegenerateSpeed { v: f64, threshold: f64 },

    #[error("degenerate normal: <N|N> = {norm_sq:e} at or below threshold {threshold:e}")]
    DegenerateNormal { norm_sq: f64, threshold: f64 },

    #[error("operation supports dimension {supported} only, got {found}")]
    DimensionUnsupported { supported: usize, found: usize },

    #[error("non-finite state amplitude at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("vector is not unit length (norm {0})")]
    NonUnitVector(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("need at least {needed} samples, got {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("analytic derivative disagrees with finite difference at t = {t} (deviation {deviation:e}, tolerance {tolerance:e})")]
    DerivativeMismatch { t: f64, deviation: f64, tolerance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
