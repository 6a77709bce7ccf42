use thiserror::Error;

/// Errors raised by the estimation, tuning and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IrwError {
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("ill-posed problem: {0}")]
    IllPosed(String),
    #[error("backtracking exceeded {limit} inflations (phi = {phi:e}); data may contain non-finite values")]
    BacktrackLimit { limit: usize, phi: f64 },
}

pub type Result<T> = std::result::Result<T, IrwError>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(IrwError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
