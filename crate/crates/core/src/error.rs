use crate::frame::DualKind;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("incompatible dimensions: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector of length {0} is not a perfect square")]
    NotSquareLength(usize),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("element {index} is not Hermitian (‖A − A†‖ = {deviation:e})")]
    NotHermitian { index: usize, deviation: f64 },
    #[error("element {index} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { index: usize, min_eigenvalue: f64 },
    #[error("elements do not resolve the identity (‖ΣP_i − I‖ = {defect:e})")]
    Incomplete { defect: f64 },
    #[error("operator {index} is not a density operator: {reason}")]
    NotAState { index: usize, reason: &'static str },
    #[error("ensemble weights are invalid (sum {sum}, min {min})")]
    InvalidWeights { sum: f64, min: f64 },
    #[error("operator lies outside the span of the frame (relative residual {residual:e})")]
    OutsideSpan { residual: f64 },
    #[error("expected a {expected:?} dual, got {found:?}")]
    KindMismatch { expected: DualKind, found: DualKind },
    #[error("metric vanishes on every outcome")]
    ZeroMetric,
    #[error("frame spans only the zero operator")]
    ZeroSpan,
    #[error("optimal variance {denominator:e} is not positive; relative noise is undefined")]
    DegenerateVariance { denominator: f64 },
    #[error("outcome probabilities sum to {sum}, outside the renormalization tolerance")]
    InvalidProbabilities { sum: f64 },
    #[error("outcome index {index} out of range for {outcomes} outcomes")]
    OutcomeOutOfRange { index: usize, outcomes: usize },
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(&'static str),
}
