use thiserror::Error;

use crate::modal::BasisId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed structure document. Line and column are 1-based.
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid structure: {0}")]
    Semantic(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("z = {z} lies outside the structure range [{z_min}, {z_max}]")]
    OutOfRange { z: f64, z_min: f64, z_max: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} is numerically singular (condition estimate {cond:.3e})")]
    Singular { what: &'static str, cond: f64 },

    #[error("eigensolver failed to converge on a {n}x{n} matrix")]
    EigenNoConvergence { n: usize },

    #[error(
        "mode {index} is at cutoff (|lambda| = {magnitude:.3e}); add a small material loss, \
         e.g. Im(eps) ~ 1e-6, to move it off the branch point"
    )]
    CutoffMode { index: usize, magnitude: f64 },

    #[error("eigenbasis is near-defective (condition estimate {cond:.3e})")]
    DefectiveBasis { cond: f64 },

    #[error("negative propagation length {0}")]
    NegativeLength(f64),

    #[error("basis mismatch: left operand ends in {left}, right operand starts in {right}")]
    BasisMismatch { left: BasisId, right: BasisId },

    #[error(
        "maximum subdivision depth {max_depth} reached on [{z_l}, {z_r}] with estimated error \
         {est_error:.3e}"
    )]
    MaxDepthExceeded {
        max_depth: usize,
        z_l: f64,
        z_r: f64,
        est_error: f64,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::Semantic(_)
                | Error::InvalidArgument(_)
                | Error::OutOfRange { .. }
                | Error::NegativeLength(_)
        )
    }
}
