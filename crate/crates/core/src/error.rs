use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical kernels and model builders.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("bad time range: t1 = {t1} must not precede t0 = {t0}")]
    BadTimeRange { t0: f64, t1: f64 },
    #[error("non-positive time step {0}")]
    BadTimeStep(f64),
    #[error("point {coordinate} lies outside the cavity half-width {half_width}")]
    OutOfCavity { coordinate: f64, half_width: f64 },
    #[error("unknown cavity mode {0}")]
    UnknownMode(usize),
    #[error("outcome probability {0:e} too small to collapse onto")]
    ZeroProbability(f64),
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
