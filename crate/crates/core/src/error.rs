use thiserror::Error;

/// Errors raised while validating physical parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("delta (single-photon detuning) must be non-zero")]
    ZeroDetuning,
}

/// Errors from the Green's-function engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreensError {
    /// |M(L,ω)| fell below the configured floor: the linear theory diverges here.
    #[error("at oscillation threshold: |M(L,omega)| = {m_abs:e} is below the floor {floor:e}")]
    AtThreshold { m_abs: f64, floor: f64 },
    #[error("source position {z} outside [0, 1]")]
    OutOfRange { z: f64 },
}

/// Errors from the threshold finder and operating-point helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    /// The medium cannot oscillate; `infimum` is the smallest |M(L,0)| reachable through the free variable.
    #[error("no oscillation threshold exists (min |M(L,0)| over the scan = {infimum:e})")]
    NoThreshold { infimum: f64 },
    #[error("no sign change of M(L,0) found over {scanned} scan points")]
    BracketFailure { scanned: usize },
    #[error("{what} is undefined when gamma_0 = 0")]
    UndefinedForLosslessCoherence { what: &'static str },
    #[error("target |M|^2 = {target} must lie in (0, 1)")]
    BadTarget { target: f64 },
    #[error(transparent)]
    Params(#[from] ParamError),
}

/// Errors from the Monte-Carlo path.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("noise table not realizable: {channel} intensity correlator is {value}")]
    NotRealizable { channel: &'static str, value: f64 },
    #[error("need at least {min} z cells, got {n_z}")]
    TooFewCells { n_z: usize, min: usize },
    #[error("need at least {min} samples, got {n_samples}")]
    TooFewSamples { n_samples: usize, min: usize },
    #[error("{flagged} of {total} samples hit the threshold singularity")]
    TooManyFlagged { flagged: usize, total: usize },
}

/// Errors from sweep specification validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep grid must be strictly monotone (violated at index {index})")]
    NotMonotone { index: usize },
    #[error("sweep requests no quantities")]
    NoQuantities,
}
