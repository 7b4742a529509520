//! Processing coefficients and the variance they induce.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::frame::{
    build_frame, canonical_dual, gram_projector, optimal_dual, DualFrame, DualKind, FrameData,
    optimization_terms, GramProjector,
};
use crate::matrix::CMatrix;
use crate::measurement::{metric_from_ensemble, Ensemble, Metric, Povm};
use crate::operator::{hs_inner, Operator};

/// Relative tolerance on `‖X − Π_S X‖ / ‖X‖` for span membership.
pub const SPAN_TOL: f64 = 1e-8;
/// Below this the optimal variance counts as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Coefficients `f_i[X] = ⟨⟨D_i|X⟩⟩` for one operator and one dual.
#[derive(Debug, Clone)]
pub struct ProcessingRule {
    pub coefficients: Vec<Complex64>,
    pub dual_kind: DualKind,
    pub target: Operator,
}

impl ProcessingRule {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Variance functionals of one dual for one operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport {
    /// `Σ_D(X) = Σ_i |f_i[X]|² π_ii`.
    pub sigma: f64,
    /// Ensemble average of `|Tr[ρX]|²`.
    pub moment: f64,
    /// `δ_D(X) = Σ_D(X) − moment`.
    pub delta: f64,
    /// `Ψ(X)`, for the optimal dual.
    pub psi: Option<f64>,
    /// `ε(X)`, for canonical-versus-optimal comparisons.
    pub epsilon: Option<f64>,
}

fn span_residual(df: &DualFrame, x: &Operator) -> f64 {
    let norm = x.hs_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let v = x.vectorize();
    let projected = df.span_proj().mul_vec(v.components());
    let diff: f64 = v
        .components()
        .iter()
        .zip(&projected)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Float::sqrt(diff) / norm
}

/// `f_i[X] = ⟨⟨D_i|X⟩⟩`. Fails when `X` is not in the span of the frame.
pub fn coefficients(df: &DualFrame, x: &Operator) -> Result<ProcessingRule> {
    if x.dim() != df.dim() {
        return Err(Error::DimensionMismatch {
            expected: df.dim(),
            found: x.dim(),
        });
    }
    let residual = span_residual(df, x);
    if residual > SPAN_TOL {
        return Err(Error::OutsideSpan { residual });
    }
    let coefficients = df
        .duals()
        .iter()
        .map(|d| hs_inner(d, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProcessingRule {
        coefficients,
        dual_kind: df.kind(),
        target: x.clone(),
    })
}

/// `Σ_i f_i[X] p_i`.
pub fn expected_value(rule: &ProcessingRule, probs: &[f64]) -> Result<Complex64> {
    if probs.len() != rule.len() {
        return Err(Error::DimensionMismatch {
            expected: rule.len(),
            found: probs.len(),
        });
    }
    Ok(rule
        .coefficients
        .iter()
        .zip(probs)
        .map(|(f, p)| f * p)
        .sum())
}

fn weighted_norm(coeffs: &[Complex64], metric: &Metric) -> Result<f64> {
    if coeffs.len() != metric.len() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.len(),
            found: metric.len(),
        });
    }
    Ok(coeffs
        .iter()
        .zip(metric.diag())
        .map(|(f, p)| f.norm_sqr() * p)
        .sum())
}

/// `Σ_D(X) = Σ_i |⟨⟨D_i|X⟩⟩|² π_ii`.
pub fn sigma_functional(df: &DualFrame, x: &Operator, metric: &Metric) -> Result<f64> {
    weighted_norm(&coefficients(df, x)?.coefficients, metric)
}

/// `δ_D(X) = Σ_D(X) − avg |⟨X⟩|²` for the given POVM and prior ensemble.
pub fn delta_variance(
    df: &DualFrame,
    x: &Operator,
    povm: &Povm,
    ens: &Ensemble,
) -> Result<VarianceReport> {
    let metric = metric_from_ensemble(povm, ens)?;
    let sigma = sigma_functional(df, x, &metric)?;
    let moment = ens.second_moment(x)?;
    Ok(VarianceReport {
        sigma,
        moment,
        delta: sigma - moment,
        psi: None,
        epsilon: None,
    })
}

/// `π[(I−M)π(I−M)]‡π`, the kernel of the optimization correction.
fn correction_kernel(gp: &GramProjector, metric: &Metric) -> Result<CMatrix> {
    let n = gp.matrix().rows();
    if metric.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: metric.len(),
        });
    }
    let pi = CMatrix::from_diag(&metric.effective_diag());
    let (_, inner) = optimization_terms(gp, &pi)?;
    Ok(&(&pi * &inner) * &pi)
}

fn quadratic_form(k: &CMatrix, f: &[Complex64]) -> f64 {
    let kf = k.mul_vec(f);
    f.iter().zip(&kf).map(|(a, b)| a.conj() * b).sum::<Complex64>().re
}

/// `Ψ(X) = Σ_ij ⟨⟨X|Δ_i⟩⟩ (π[(I−M)π(I−M)]‡π)_ij ⟨⟨Δ_j|X⟩⟩`, the variance
/// removed by switching from the canonical to the optimal dual.
pub fn psi_correction(
    cd: &DualFrame,
    gp: &GramProjector,
    metric: &Metric,
    x: &Operator,
) -> Result<f64> {
    if cd.kind() != DualKind::Canonical {
        return Err(Error::KindMismatch {
            expected: DualKind::Canonical,
            found: cd.kind(),
        });
    }
    let f = coefficients(cd, x)?.coefficients;
    Ok(quadratic_form(&correction_kernel(gp, metric)?, &f).max(0.0))
}

/// Relative added noise of the canonical dual over the optimal one,
/// `ε = Ψ / (Σ_Δ − Ψ − avg |⟨X⟩|²)`.
pub fn epsilon_relative(x: &Operator, povm: &Povm, ens: &Ensemble) -> Result<f64> {
    let analysis = Analysis::new(povm, ens)?;
    let report = analysis.compare(x)?;
    report.epsilon.ok_or(Error::DegenerateVariance {
        denominator: report.optimal.delta,
    })
}

/// Canonical and optimal processing for a fixed POVM and prior ensemble.
#[derive(Debug, Clone)]
pub struct Analysis {
    frame: FrameData,
    canonical: DualFrame,
    gram: GramProjector,
    metric: Metric,
    optimal: DualFrame,
    ensemble: Ensemble,
}

/// Canonical-versus-optimal variance comparison for one operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub canonical: VarianceReport,
    pub optimal: VarianceReport,
    pub psi: f64,
    /// `None` when the optimal variance is not positive.
    pub epsilon: Option<f64>,
}

impl Analysis {
    pub fn new(povm: &Povm, ens: &Ensemble) -> Result<Self> {
        let frame = build_frame(povm)?;
        let canonical = canonical_dual(&frame)?;
        let gram = gram_projector(&frame, &canonical)?;
        let metric = metric_from_ensemble(povm, ens)?;
        let optimal = optimal_dual(&frame, &canonical, &gram, &metric)?;
        Ok(Self {
            frame,
            canonical,
            gram,
            metric,
            optimal,
            ensemble: ens.clone(),
        })
    }

    pub fn frame(&self) -> &FrameData {
        &self.frame
    }

    pub fn canonical(&self) -> &DualFrame {
        &self.canonical
    }

    pub fn optimal(&self) -> &DualFrame {
        &self.optimal
    }

    pub fn gram(&self) -> &GramProjector {
        &self.gram
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn dual(&self, kind: DualKind) -> Option<&DualFrame> {
        match kind {
            DualKind::Canonical => Some(&self.canonical),
            DualKind::Optimal => Some(&self.optimal),
            DualKind::Alternate => None,
        }
    }

    pub fn variance(&self, df: &DualFrame, x: &Operator) -> Result<VarianceReport> {
        let sigma = sigma_functional(df, x, &self.metric)?;
        let moment = self.ensemble.second_moment(x)?;
        Ok(VarianceReport {
            sigma,
            moment,
            delta: sigma - moment,
            psi: None,
            epsilon: None,
        })
    }

    pub fn compare(&self, x: &Operator) -> Result<Comparison> {
        let mut canonical = self.variance(&self.canonical, x)?;
        let mut optimal = self.variance(&self.optimal, x)?;
        let psi = psi_correction(&self.canonical, &self.gram, &self.metric, x)?;
        let denominator = canonical.sigma - psi - canonical.moment;
        let epsilon = (denominator > DEGENERATE_VARIANCE).then(|| psi / denominator);
        optimal.psi = Some(psi);
        canonical.epsilon = epsilon;
        Ok(Comparison {
            canonical,
            optimal,
            psi,
            epsilon,
        })
    }
}
