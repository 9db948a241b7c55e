use alloc::vec::Vec;

/// Errors raised by the core numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("spline order m={0} is not supported (expected 1 <= m <= 4)")]
    UnsupportedOrder(usize),
    #[error("Bernoulli polynomial degree {0} is not supported (expected <= 8)")]
    UnsupportedDegree(usize),
    #[error("value {value} lies outside [0, 1]")]
    Domain { value: f64 },
    #[error("knots must be strictly increasing (violated at index {index})")]
    UnsortedKnots { index: usize },
    #[error("insufficient data: {what}")]
    InsufficientData { what: &'static str },
    #[error("null-space matrix is rank deficient; knots are degenerate")]
    DegenerateKnots,
    #[error("shape mismatch: {what}")]
    Shape { what: &'static str },
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("penalty parameter must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("ill-conditioned system: {what}")]
    IllConditioned { what: &'static str },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("design is collinear: X'(I-A)X is singular")]
    CollinearDesign,
    #[error("collinear active columns in LARS direction: {indices:?}")]
    DegenerateDirection { indices: Vec<usize> },
    #[error("coordinate descent did not converge after {sweeps} sweeps (last change {last_change:e}, kkt {kkt:e})")]
    IterationsExceeded {
        sweeps: usize,
        last_change: f64,
        kkt: f64,
    },
    #[error("insufficient degrees of freedom: denominator {0}")]
    InsufficientDf(f64),
    #[error("invalid tuning grid: {what}")]
    InvalidGrid { what: &'static str },
    #[error("invalid parameter: {what}")]
    InvalidParameter { what: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
