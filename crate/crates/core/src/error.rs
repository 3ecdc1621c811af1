use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("truncation order must be at least 1")]
    ZeroOrder,

    #[error("level {index} is outside the available range 1..={available}")]
    LevelOutOfRange { index: usize, available: usize },

    #[error("coupling matrix is not skew-Hermitian at ({j}, {k}): defect {defect:e}")]
    NotSkewHermitian { j: usize, k: usize, defect: f64 },

    #[error("initial state has norm {norm}, expected 1")]
    NonUnitState { norm: f64 },

    #[error("state has {got} coefficients, compression order is {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("control value {value} at segment {segment} is outside the control set")]
    OutsideControlSet { segment: usize, value: f64 },

    #[error("pulse is zero almost everywhere; efficiency is undefined")]
    ZeroPulse,

    #[error("transition ({j}, {k}) has zero coupling; no transfer is possible")]
    NoTransfer { j: usize, k: usize },

    #[error("transition ({j}, {k}) is resonance-free: levels have equal eigenvalues")]
    DegenerateLevels { j: usize, k: usize },

    #[error("ladder chain is broken: coupling between levels {j} and {} vanishes", j + 1)]
    BrokenChain { j: usize },

    #[error("no truncation order up to {cap} satisfies the bound")]
    OrderCapExceeded { cap: usize },

    #[error("check refused: {0}")]
    Refused(String),
}

pub type Result<T> = std::result::Result<T, Error>;
