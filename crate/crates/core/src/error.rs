//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated its documented range or invariant.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// Vector/matrix length did not match the expected dimension.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Row and column of the requested subcarrier are entirely zero in
    /// both channel matrices; the depth-selection ratio is undefined.
    #[error("degenerate input: subcarrier {subcarrier} has zero energy in both channels")]
    DegenerateInput { subcarrier: usize },

    /// No 4-cycle-free circulant lifting was found within the attempt bound.
    #[error("QC-LDPC construction failed after {attempts} attempts: {reason}")]
    CodeConstruction { attempts: usize, reason: String },

    /// A probability vector contained negative, non-finite, or
    /// non-normalizable entries.
    #[error("invalid distribution at position {position}: {reason}")]
    InvalidDistribution { position: usize, reason: String },

    /// The regularized LMMSE system could not be solved.
    #[error("singular LMMSE system (noise variance {sigma2})")]
    SingularSystem { sigma2: f64 },

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
