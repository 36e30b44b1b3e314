use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers, the synthesis routines and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid memory kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("resolution rule violated: h * n_max = {product:.4} > 0.1 (h = {step:.3e}, n_max = {n_max})")]
    ResolutionRule { step: f64, n_max: u64, product: f64 },

    #[error("exceptional index n = {0}: alpha^2 = n^2 so beta_n vanishes")]
    ExceptionalIndex(i64),

    #[error("beta_n is not real for n = {n} (alpha^2 = {alpha_sq} > n^2)")]
    ComplexFrequency { n: i64, alpha_sq: f64 },

    #[error("length mismatch: expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("sequences live on different time grids")]
    GridMismatch,

    #[error("expected a {expected} trajectory, found {found}")]
    WrongKind { expected: &'static str, found: &'static str },

    #[error("the exponential oracle needs an exponential-sum (or zero) kernel")]
    NonExponentialKernel,

    #[error("mode index must be nonzero")]
    ZeroMode,

    #[error("Z_n cross-check failed: deviation {deviation:.3e} exceeds {bound:.3e} (n = {n})")]
    CrossCheck { n: i64, deviation: f64, bound: f64 },

    #[error("near-singular Gram matrix: lambda_min = {lambda_min:.3e}, lambda_max = {lambda_max:.3e}")]
    NearSingularGram { lambda_min: f64, lambda_max: f64 },

    #[error("elastic degeneracy: with M = 0 the stress equals the deformation, so d must equal c")]
    ElasticDegeneracy,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("x = {0} lies outside [0, pi]")]
    OutOfRange(f64),

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ExceptionalIndex(_) => 3,
            Error::NearSingularGram { .. } => 4,
            Error::ElasticDegeneracy => 5,
            Error::Config(_)
            | Error::InvalidKernel(_)
            | Error::InvalidGrid(_)
            | Error::ResolutionRule { .. }
            | Error::ComplexFrequency { .. }
            | Error::NonExponentialKernel
            | Error::ZeroMode
            | Error::OutOfRange(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
