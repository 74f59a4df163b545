use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Fewer than two time periods were supplied.
    TooFewPeriods { n: usize },
    /// The observation matrix has no variable columns.
    NoVariables,
    /// Two matrices disagree on a shared dimension.
    DimensionMismatch {
        left: &'static str,
        right: &'static str,
        detail: String,
    },
    /// A time-varying `Z` has the wrong number of periods.
    DesignLength { found: usize, expected: usize },
    IndexOutOfRange { index: usize, len: usize },
    NonFinite { what: &'static str },
    NotSymmetric { what: &'static str },
    NotPositiveSemidefinite { what: &'static str, min_eigenvalue: f64 },
    InvalidSeasonality { s: usize },
    ExogenousRows { found: usize, required: usize },
    NonFiniteExogenous { row: usize, col: usize },
    /// The innovation covariance could not be factorized at period `t`.
    SingularInnovation { t: usize },
    InvalidConfig(String),
    /// Every seed of the optimizer ended without a finite likelihood.
    EstimationFailed { diagnostics: Vec<String> },
    MissingComponent {
        component: &'static str,
        kind: &'static str,
    },
    /// Forecasting needs design rows beyond the sample that were not supplied.
    InsufficientFutureRows { required: usize, available: usize },
    MismatchedFilterOutput(String),
    EmptyProbabilities,
    InvalidProbability(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TooFewPeriods { n } => {
                write!(f, "at least 2 time periods are required, got n = {n}")
            }
            Error::NoVariables => write!(f, "observations have no variable columns"),
            Error::DimensionMismatch {
                left,
                right,
                detail,
            } => write!(f, "dimension mismatch between {left} and {right}: {detail}"),
            Error::DesignLength { found, expected } => {
                write!(f, "Z sequence length {found} \u{2260} n = {expected}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "time index {index} out of range for {len} periods")
            }
            Error::NonFinite { what } => write!(f, "{what} contains non-finite entries"),
            Error::NotSymmetric { what } => write!(f, "{what} is not symmetric"),
            Error::NotPositiveSemidefinite {
                what,
                min_eigenvalue,
            } => write!(
                f,
                "{what} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::InvalidSeasonality { s } => {
                write!(f, "seasonal period must be at least 2, got {s}")
            }
            Error::ExogenousRows { found, required } => write!(
                f,
                "exogenous matrix has {found} rows but at least {required} are required"
            ),
            Error::NonFiniteExogenous { row, col } => {
                write!(f, "exogenous entry ({row}, {col}) is not finite")
            }
            Error::SingularInnovation { t } => {
                write!(f, "innovation covariance is numerically singular at t = {t}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::EstimationFailed { diagnostics } => {
                write!(f, "estimation failed: no seed produced a finite likelihood")?;
                for d in diagnostics {
                    write!(f, "; {d}")?;
                }
                Ok(())
            }
            Error::MissingComponent { component, kind } => {
                write!(f, "a {kind} model has no {component} component")
            }
            Error::InsufficientFutureRows {
                required,
                available,
            } => write!(
                f,
                "forecast needs {required} future design rows but only {available} are available ({} missing)",
                required - available
            ),
            Error::MismatchedFilterOutput(msg) => {
                write!(f, "filter output does not match the model: {msg}")
            }
            Error::EmptyProbabilities => write!(f, "no quantile probabilities given"),
            Error::InvalidProbability(p) => {
                write!(f, "quantile probability {p} is outside (0, 1)")
            }
        }
    }
}

impl core::error::Error for Error {}
