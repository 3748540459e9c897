use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("wavevector k = 0 is not allowed (fields are mean-zero)")]
    ZeroModePresent,

    #[error("duplicate wavevector {0}")]
    DuplicateWavevector(String),

    #[error("wavevector dimension mismatch: expected d = {expected}, got {got}")]
    DimensionMismatch { expected: u8, got: u8 },

    #[error("amplitude at {0} is not finite")]
    NonFiniteAmplitude(String),

    #[error("fields use different conventions: {0}")]
    ConventionMismatch(String),

    #[error("grid size {grid} too small: need at least {needed} points per axis")]
    GridTooSmall { grid: usize, needed: usize },

    #[error("parameter constraint violated: {0}")]
    ParameterConstraintViolated(String),

    #[error("diffusivity must be nonnegative, got {0}")]
    NegativeDiffusivity(f64),

    #[error(
        "step count {steps} exceeds cap {cap}: wavevectors would overflow exact integer range"
    )]
    StepCapExceeded { steps: u64, cap: u64 },

    #[error("degenerate norm: {0}")]
    DegenerateNorm(String),

    #[error("series too short: {got} samples, need at least {need}")]
    InsufficientHorizon { got: usize, need: usize },

    #[error("no candidate times satisfy the energy lower bound")]
    NoCandidateTimes,

    #[error("mode set has {got} wavevectors, exceeding the sign-state cap {cap}")]
    StateCapExceeded { got: usize, cap: usize },

    #[error("horizon exhausted after {completed} shells")]
    HorizonExhausted { completed: usize },

    #[error("no subsequence satisfies the greedy ratio schedule: {0}")]
    SubsequenceUnavailable(String),

    #[error("time series are not aligned: {0}")]
    MisalignedSeries(String),

    #[error("denominator series is not positive on the tail")]
    DegenerateDenominator,

    #[error("series has non-positive values in the fit window")]
    NonPositiveValues,

    #[error("fit window holds {got} points, need at least {need}")]
    WindowTooSmall { got: usize, need: usize },

    #[error("rate function is undefined at t = {0}")]
    RateUndefined(f64),

    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
