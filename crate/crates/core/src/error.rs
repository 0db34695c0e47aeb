use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate denominator: |delta_c + Delta_so| = {0:e} is below tolerance")]
    DegenerateDenominator(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate gap {gap:e} ns^-1 at tau = {tau}")]
    DegenerateGap { tau: f64, gap: f64 },

    #[error("ambiguous level tracking at tau = {tau}: best overlap {best:.6}, runner-up {second:.6}")]
    AmbiguousTracking { tau: f64, best: f64, second: f64 },

    #[error("time step too coarse: one-step norm drift {drift:e} at t = {t} ns")]
    StepTooCoarse { t: f64, drift: f64 },

    #[error("loop is not closed: mismatch {mismatch:e} exceeds {tolerance:e}")]
    OpenLoop { mismatch: f64, tolerance: f64 },

    #[error("subspace population {0:e} is negligible")]
    NegligibleSubspace(f64),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
