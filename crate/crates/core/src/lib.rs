//! Optimal data processing for POVM measurements.
//!
//! Given a POVM `{P_i}` and an operator `X` in its span, the expectation
//! `Tr[ρX]` is recovered as `Σ_i f_i[X] p(i|ρ)` with coefficients
//! `f_i[X] = ⟨⟨D_i|X⟩⟩` drawn from a dual frame `{D_i}`. This crate builds the
//! canonical dual, the alternate duals and the dual that minimizes the
//! ensemble-averaged variance, evaluates the variance functionals, and
//! simulates measurement records to check them statistically.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decomp;
pub mod error;
pub mod estimation;
pub mod frame;
pub mod matrix;
pub mod measurement;
pub mod operator;
pub mod sampling;

pub use error::{Error, Result};
pub use estimation::{
    coefficients, delta_variance, epsilon_relative, expected_value, psi_correction,
    sigma_functional, Analysis, ProcessingRule, VarianceReport,
};
pub use frame::{
    alternate_dual, build_frame, canonical_dual, gram_projector, optimal_dual, verify_min_norm,
    DualFrame, DualKind, FrameData, GramProjector, MinNormReport,
};
pub use matrix::CMatrix;
pub use measurement::{
    born_probabilities, metric_from_ensemble, uniform_ensemble_moment, validate_povm, Ensemble,
    Metric, Povm, ValidationMode,
};
pub use num_complex::Complex64;
pub use operator::{hs_inner, moore_penrose, span_projector, Operator, VecOperator};
pub use sampling::{
    empirical_estimate, sample_haar_state, sample_outcomes, EmpiricalReport, SimulationConfig,
    StateSource,
};
