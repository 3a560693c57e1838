use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("conditional undefined: Pr(T = {0}) = 0")]
    ZeroMassSlice(String),

    #[error("enumeration of {required} items exceeds cap {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Default cap on exhaustive enumerations.
pub const DEFAULT_CAP: u128 = 1 << 28;

pub(crate) fn check_cap(required: u128, cap: u128) -> Result<()> {
    if required > cap {
        Err(Error::CapExceeded { required, cap })
    } else {
        Ok(())
    }
}
