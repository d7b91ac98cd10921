use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    /// A scalar argument outside its legal range.
    #[error("invalid value for `{name}`: {value} (expected {expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// Inputs that do not describe the same object (topology vs. streams,
    /// grids from different replicas, ...).
    #[error("structural mismatch: {0}")]
    Structure(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("query outside the covered range: {0}")]
    Range(String),

    #[error("state space of {size} exceeds the limit of {limit}")]
    TooLarge { size: u64, limit: u64 },

    /// A hard invariant of a coupling or construction failed. Never clamped.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    expected: &'static str,
) -> Result<()> {
    if value.is_nan() || value < lo || value > hi {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    } else {
        Ok(())
    }
}
