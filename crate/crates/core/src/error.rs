use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factor spec: {0}")]
    FactorSpec(String),

    #[error("|z| = {modulus} lies outside the open unit disc")]
    OutsideUnitDisc { modulus: f64 },

    #[error("exact arithmetic unavailable: {0}")]
    NotExact(String),

    #[error("prime {p} is below the validity threshold of the bound ({detail})")]
    PrimeTooSmall { p: u64, detail: String },

    #[error("logarithm branch tracking failed at p = {p}")]
    BranchTracking { p: u64 },

    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(f64, f64),

    #[error("function vanishes on or inside the disc (winding {winding})")]
    ZeroInDisc { winding: i64 },

    #[error("|f| = {modulus:e} on the contour; zero count is not well defined")]
    NearZeroOnContour { modulus: f64 },

    #[error("argument increments do not settle to an integer winding number")]
    NonIntegerWinding,

    #[error("hypothesis fails at h = {h}: sum {sum:e} < threshold {threshold:e}")]
    HypothesisFails { h: f64, sum: f64, threshold: f64 },

    #[error("interval contains {count} primes; at least 4 are required")]
    TooFewPrimes { count: usize },

    #[error("Rouché pass but zero counts differ ({f_count} vs {g_count})")]
    RoucheInconsistent { f_count: i64, g_count: i64 },

    #[error("greedy stalled: surveyed error {error:e} exceeds {eps:e}")]
    Stall {
        error: f64,
        eps: f64,
        report: Box<crate::approximator::Approximation>,
    },

    #[error("stage {stage}: error {error:e} did not decrease below {previous:e} after {draws} draws")]
    StageNotDecreasing {
        stage: usize,
        error: f64,
        previous: f64,
        draws: usize,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
