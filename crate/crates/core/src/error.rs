use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Contract violations and refusals raised by the core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite objective value at axis {axis}")]
    NonFinite { axis: usize },
    #[error("decision {value} at position {position} is outside arity {arity}")]
    InvalidDecision {
        position: usize,
        value: usize,
        arity: usize,
    },
    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),
    #[error("step {step} outside 1..={max}")]
    StepOutOfRange { step: usize, max: usize },
    #[error("space has {cardinality} encodings, above the enumeration cap of {cap}")]
    CardinalityCap { cardinality: u128, cap: u128 },
    #[error("reference point is not dominated by every front point")]
    ReferenceNotDominated,
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}
