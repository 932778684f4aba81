use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("truncation order {order} exceeds the Nyquist bound {max}")]
    TruncationTooLarge { order: usize, max: usize },
    #[error("grid order {p} is too coarse for truncation order {order} (need p >= 2K)")]
    GridTooCoarse { p: usize, order: usize },
    #[error("coefficient sets have different truncation orders ({0} vs {1})")]
    TruncationMismatch(usize, usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("regularization parameter must be positive and finite, got {0}")]
    InvalidRegularization(f64),
    #[error("Sobolev exponent must be finite and non-negative, got {0}")]
    InvalidSobolevExponent(f64),
    #[error("no frequency passed the spectral cut-off")]
    NoSelectedFrequencies,
    #[error("zero empirical eigenvalue of the regressor at selected frequency {k}")]
    DegenerateSpectrum { k: i64 },
    #[error("zero empirical cross-eigenvalue at selected frequency {k}")]
    DegenerateCrossSpectrum { k: i64 },
    #[error("regularization weight is not finite at frequency {k}")]
    InvalidWeight { k: i64 },
    #[error("expected a {expected} slope estimate")]
    WrongEstimatorKind { expected: &'static str },
    #[error("slope estimates were computed from different spectral estimates")]
    InconsistentEstimates,
    #[error("studentization vanishes: instrument indistinguishable from regressor on the selected frequencies")]
    DegenerateStudentization,
    #[error("level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("Efron resampling has no multiplier law")]
    NotAMultiplierScheme,
    #[error("need at least {min} bootstrap replicates, got {got}")]
    TooFewReplicates { min: usize, got: usize },
    #[error("argument {0} outside the domain [0, 1]")]
    DomainError(f64),
    #[error("mollifier bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
    #[error("unknown slope function id {0} (expected 1, 2 or 3)")]
    UnknownSlope(u8),
    #[error("correlation pair (rho = {rho}, nu = {nu}) gives a singular or indefinite driver covariance")]
    InvalidCorrelationPair { rho: f64, nu: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("all {0} Monte Carlo repetitions failed")]
    CellFailed(usize),
    #[error("sweep contains no cells")]
    EmptySweep,
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}
