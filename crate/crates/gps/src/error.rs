use thiserror::Error;

use crate::series::Signature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GpsError {
    #[error("signature mismatch: {0:?} vs {1:?}")]
    SignatureMismatch(Signature, Signature),
    #[error("variable index {index} out of range 1..={bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("exponent must be nonnegative, got {0}")]
    NegativeExponent(String),
    #[error("base must be positive, got {0}")]
    NonPositiveBase(String),
    #[error("{base}^({exponent}) is not rational")]
    IrrationalPower { base: String, exponent: String },
    #[error("fractional power of a negative number at coordinate {0}")]
    NegativeFractionalBase(usize),
    #[error("point has {got} coordinates, expected {expected}")]
    PointArity { got: usize, expected: usize },
    #[error("series is not regular in y{0} to the available precision")]
    NotRegular(usize),
    #[error("series is not a unit (zero constant term)")]
    NotAUnit,
    #[error("chart needs the non-natural power {0} of a binomial; ramify first")]
    NonNaturalPower(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<GpsError>,
    },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GpsError>;

impl GpsError {
    /// Exit code of the command-line front-end for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            GpsError::NotRegular(_) | GpsError::PrecisionExhausted(_) => 2,
            GpsError::CapExceeded(_) => 3,
            GpsError::AtStep { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
