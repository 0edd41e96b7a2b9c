use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("eigensolver failed to converge: {0}")]
    Convergence(String),

    #[error("integration unstable at t = {time}: norm ratio {ratio:e} exceeds bound {bound:e}; reduce dt")]
    StepSize { time: f64, ratio: f64, bound: f64 },
}
