use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),
    #[error("invalid gain sequence: {0}")]
    InvalidGains(String),
    #[error("{0} must be constant over t >= 2 for this computation")]
    NotConstant(&'static str),
    #[error("gain g_{index} is zero, so the ratio g_{next}/g_{index} is undefined", next = index + 1)]
    ZeroGain { index: usize },
    #[error("error variance Sigma_{t} underflowed; |g_{next}| is no longer representable", next = t + 1)]
    SigmaUnderflow { t: usize },
    #[error("could not bracket the root of the quartic after {0} expansions")]
    BracketFailure(usize),
    #[error(
        "horizon n = {n} exceeds the exhaustive sign-search limit {limit}; use the continuous branch"
    )]
    SignSearchLimit { n: usize, limit: usize },
    #[error("{0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
