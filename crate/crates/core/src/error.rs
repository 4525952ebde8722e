use alloc::string::String;

/// Errors raised by the estimation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("prior needs at least two atoms with positive weight")]
    DegeneratePrior,

    #[error("mean {u} is outside the open interval ({lo}, {hi})")]
    MeanOutOfRange { u: f64, lo: f64, hi: f64 },

    #[error("column {0} of the design matrix is identically zero")]
    ZeroColumn(usize),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("design is rank deficient (lambda_min = {lambda_min:e}, lambda_max = {lambda_max:e})")]
    RankDeficient { lambda_min: f64, lambda_max: f64 },

    #[error("enumeration over {count} configurations exceeds the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
