use thiserror::Error;

/// Failures raised by the analysis routines.
///
/// Conditions that are part of a normal answer (a point that is not
/// smooth, a fail verdict) are values, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("variable `{name}` at line {line}, column {column} is not among the {arity} declared variables")]
    Arity {
        name: String,
        arity: usize,
        line: usize,
        column: usize,
    },
    #[error("domain error in component {component}: {kind}")]
    Domain { component: usize, kind: DomainKind },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("rejection sampling landed on a guard {attempts} times in a row (radius {radius:e})")]
    AllSamplesOnGuard { attempts: usize, radius: f64 },
    #[error("determinant signs disagree near {point:?}: {positive} positive, {negative} negative, {zero} zero probes")]
    SignDisagreement {
        point: Vec<f64>,
        positive: usize,
        negative: usize,
        zero: usize,
    },
    #[error("segment lies inside the non-smooth locus")]
    SegmentOnGuard,
    #[error("point {point:?} is not certified regular ({classification})")]
    NotRegular {
        point: Vec<f64>,
        classification: String,
    },
    #[error("local inverse validation failed at every radius (best min ratio {min_ratio:e} < delta {delta:e})")]
    CertificationFailed { delta: f64, min_ratio: f64 },
    #[error("implicit-function condition fails: estimate {estimate:e} below {threshold:e}")]
    ConditionFails { estimate: f64, threshold: f64 },
    #[error("preimage count grew from {coarse} to {fine} under grid refinement; fiber may be infinite")]
    PossiblyInfinitePreimage { coarse: usize, fine: usize },
    #[error("target is a critical or undetermined value: preimage {point:?} classified {classification}")]
    CriticalValue {
        point: Vec<f64>,
        classification: String,
    },
    #[error("target too close to the boundary image (margin {margin:e})")]
    BoundaryValue { margin: f64 },
    #[error("boundary curve passes within {distance:e} of the target")]
    BoundaryTooClose { distance: f64 },
    #[error("winding refinement exhausted (rounding residual {residual})")]
    RefinementExhausted { residual: f64 },
    #[error("degree axiom precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("operation requires dimension {required}, map has dimension {actual}")]
    UnsupportedDimension { required: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    DivisionByZero,
    SqrtOfNegative,
    NonFinite,
}

impl std::fmt::Display for DomainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainKind::DivisionByZero => write!(f, "division by zero"),
            DomainKind::SqrtOfNegative => write!(f, "square root of a negative number"),
            DomainKind::NonFinite => write!(f, "non-finite intermediate value"),
        }
    }
}

impl Error {
    /// True for errors caused by malformed user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::Arity { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidInput(_)
                | Error::UnsupportedDimension { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
