use thiserror::Error;

/// Errors raised while building states, configuring a session or running the analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("state is not normalized: |f0|^2 + |f1|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("states live in different frequency bases")]
    BasisMismatch,

    #[error("filter band [{low:e}, {high:e}] rad/s does not overlap the packet spectrum")]
    DegenerateFilter { low: f64, high: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("timing regime violated: {0}")]
    RegimeViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
