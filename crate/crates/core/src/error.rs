use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{function} is undefined at {argument}")]
    Domain {
        function: &'static str,
        argument: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("truncation failure: bound {achieved:e} above target {target:e} after {terms} terms")]
    TruncationFailure {
        achieved: f64,
        target: f64,
        terms: usize,
    },
    #[error("first moment {first_moment} exceeds 1")]
    MomentExcess { first_moment: f64 },
    #[error("degenerate step law: nu(0) = {nu_zero}, nu(-1) = {nu_minus_one}")]
    Degenerate { nu_zero: f64, nu_minus_one: f64 },
    #[error("negative weight nu({k}) = {value:e}")]
    Negativity { k: i64, value: f64 },
    #[error("sampler truncation drops mass {dropped:e} (limit {limit:e})")]
    SamplerTruncation { dropped: f64, limit: f64 },
    #[error("negative coefficient at index {index}: {value:e}")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("calibration failed: {0}")]
    Calibration(String),
}
