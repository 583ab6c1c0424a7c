use thiserror::Error;

/// Errors raised by the simulation pipeline.
///
/// Variants fall into two groups: invalid inputs (`InvalidParameter`,
/// `DimensionMismatch`, `Singularity`, `NotPerfectSquare`, ...) and numerical
/// failures (`Decomposition`, `NegativeEigenvalue`). The CLI maps the first
/// group to exit code 1 and the second to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coincident points at distance {distance:e} m (Green's function singularity)")]
    Singularity { distance: f64 },

    #[error("antenna count {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("spectrum has zero total energy")]
    ZeroEnergy,

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("eigenvalue {value:e} is below the round-off floor {floor:e}")]
    NegativeEigenvalue { value: f64, floor: f64 },

    #[error("sweep point {value} failed: {source}")]
    SweepPoint {
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("malformed spec: {0}")]
    Spec(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Decomposition(_) | Error::NegativeEigenvalue { .. } => true,
            Error::SweepPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}
