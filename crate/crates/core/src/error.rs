use thiserror::Error;

/// Errors raised by the splitting pipeline.
///
/// Variants map one-to-one onto the failure kinds callers need to tell apart
/// (bad parameters, grid-verified geometry failures, numerical breakdown).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),
    #[error("pair not admissible (item {item}): {reason}")]
    NotAdmissible { item: u8, reason: String },
    #[error("domain violation: {count} point(s) escape the target domain, first at {first}")]
    DomainViolation { count: usize, first: String },
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("numerical failure: {reason} (residual {residual:e})")]
    NumericalFailure { reason: String, residual: f64 },
    #[error("ill-conditioned contour: min |f - w| = {0:e}")]
    IllConditionedContour(f64),
    #[error("invalid support: {0}")]
    InvalidSupport(String),
    #[error("map is not holomorphic: residual {residual:e} exceeds {tolerance:e}")]
    NotHolomorphic { residual: f64, tolerance: f64 },
    #[error("threshold violated: {0}")]
    Threshold(String),
    #[error("geometry error: inclusion {0} failed")]
    Geometry(String),
    #[error("invalid overlap: {0}")]
    InvalidOverlap(String),
    #[error("iteration aborted at step {step}: {reason}")]
    Aborted { step: usize, reason: String },
    #[error("partial result: failing parameters {0:?}")]
    PartialResult(Vec<f64>),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::OutOfRange(_) => "out-of-range",
            Error::GeometryInfeasible(_) => "geometry-infeasible",
            Error::NotAdmissible { .. } => "not-admissible",
            Error::DomainViolation { .. } => "domain-violation",
            Error::PreconditionViolation(_) => "precondition-violation",
            Error::NumericalFailure { .. } => "numerical-failure",
            Error::IllConditionedContour(_) => "ill-conditioned-contour",
            Error::InvalidSupport(_) => "invalid-support",
            Error::NotHolomorphic { .. } => "not-holomorphic",
            Error::Threshold(_) => "threshold-error",
            Error::Geometry(_) => "geometry-error",
            Error::InvalidOverlap(_) => "invalid-overlap",
            Error::Aborted { .. } => "aborted-with-trace",
            Error::PartialResult(_) => "partial-result",
            Error::Verification(_) => "verification-failed",
            Error::Parse(_) => "parse-error",
            Error::Config(_) => "validation-error",
            Error::Io(_) => "io-error",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
