//! POVMs, prior ensembles of states and the outcome metric they induce.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::Operator;

/// Hermiticity tolerance for POVM elements and states (HS norm of `A − A†`).
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Lowest admissible eigenvalue for positive operators.
pub const POSITIVITY_TOL: f64 = -1e-10;
/// Completeness tolerance in strict mode (HS norm of `ΣP_i − I`).
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Metric entries at or below this are outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

const TRACE_TOL: f64 = 1e-10;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Completeness defect above [`COMPLETENESS_TOL`] is an error.
    Strict,
    /// Completeness defect is recorded but accepted.
    Permissive,
}

/// A validated positive operator-valued measure.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<Operator>,
    defect: f64,
}

impl Povm {
    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    /// `‖Σ_i P_i − I‖_HS` measured at construction.
    pub fn completeness_defect(&self) -> f64 {
        self.defect
    }

    pub fn is_complete(&self) -> bool {
        self.defect <= COMPLETENESS_TOL
    }
}

/// Checks positivity (and, in strict mode, completeness) of a list of operators.
pub fn validate_povm(ops: Vec<Operator>, mode: ValidationMode) -> Result<Povm> {
    let first = ops.first().ok_or(Error::Empty("POVM"))?;
    let d = first.dim();
    let mut sum = Operator::zeros(d);
    for (index, op) in ops.iter().enumerate() {
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: op.dim(),
            });
        }
        if !op.is_finite() {
            return Err(Error::NonFinite);
        }
        let deviation = op.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { index, deviation });
        }
        let min_eigenvalue = op.eigenvalues()?[0];
        if min_eigenvalue < POSITIVITY_TOL {
            return Err(Error::NotPositive {
                index,
                min_eigenvalue,
            });
        }
        sum = &sum + op;
    }
    let defect = (&sum - &Operator::identity(d)).hs_norm();
    if mode == ValidationMode::Strict && defect > COMPLETENESS_TOL {
        return Err(Error::Incomplete { defect });
    }
    Ok(Povm {
        elements: ops,
        defect,
    })
}

/// `Re Tr[A B]` without forming the product.
fn trace_product(a: &Operator, b: &Operator) -> Complex64 {
    let d = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..d {
        for n in 0..d {
            acc += a[(m, n)] * b[(n, m)];
        }
    }
    acc
}

/// Verifies that `rho` is a density operator; `index` labels it in errors.
pub fn check_state(rho: &Operator, index: usize) -> Result<()> {
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    if rho.hermitian_deviation() > HERMITIAN_TOL {
        return Err(Error::NotAState {
            index,
            reason: "not Hermitian",
        });
    }
    if (rho.trace() - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::NotAState {
            index,
            reason: "trace differs from 1",
        });
    }
    if rho.eigenvalues()?[0] < POSITIVITY_TOL {
        return Err(Error::NotAState {
            index,
            reason: "not positive semidefinite",
        });
    }
    Ok(())
}

/// Born-rule probabilities `p_i = Tr[P_i ρ]`.
///
/// Values are not renormalized; their sum deviates from one by at most the
/// POVM's completeness defect.
pub fn born_probabilities(povm: &Povm, rho: &Operator) -> Result<Vec<f64>> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: rho.dim(),
        });
    }
    check_state(rho, 0)?;
    Ok(povm
        .elements
        .iter()
        .map(|p| trace_product(p, rho).re.max(0.0))
        .collect())
}

/// `(Tr[X†X] + |Tr X|²) / (d(d+1))`: the mean of `|Tr[ρX]|²` over pure
/// states drawn uniformly (Haar) from the unit sphere.
pub fn uniform_ensemble_moment(x: &Operator) -> f64 {
    let d = x.dim() as f64;
    let hs = x.hs_norm();
    (hs * hs + x.trace().norm_sqr()) / (d * (d + 1.0))
}

/// Prior ensemble of states in the Bayesian scheme.
#[derive(Debug, Clone)]
pub struct Ensemble {
    dim: usize,
    members: Vec<(Operator, f64)>,
    avg_state: Operator,
    uniform: bool,
}

impl Ensemble {
    /// Uniform distribution over pure states; `ρ_E = I/d`.
    pub fn uniform(dim: usize) -> Self {
        Self {
            dim,
            members: Vec::new(),
            avg_state: Operator::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
            uniform: true,
        }
    }

    /// Finite ensemble of weighted density operators.
    pub fn new(members: Vec<(Operator, f64)>) -> Result<Self> {
        let dim = members.first().ok_or(Error::Empty("ensemble"))?.0.dim();
        let mut avg = Operator::zeros(dim);
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        for (index, (rho, w)) in members.iter().enumerate() {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: rho.dim(),
                });
            }
            check_state(rho, index)?;
            sum += w;
            min = min.min(*w);
            avg = &avg + &rho.scale(Complex64::new(*w, 0.0));
        }
        if !(min >= 0.0) || !((sum - 1.0).abs() <= WEIGHT_TOL) {
            return Err(Error::InvalidWeights { sum, min });
        }
        Ok(Self {
            dim,
            members,
            avg_state: avg,
            uniform: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn members(&self) -> &[(Operator, f64)] {
        &self.members
    }

    /// `ρ_E = Σ_k p_k ρ_k`.
    pub fn avg_state(&self) -> &Operator {
        &self.avg_state
    }

    /// Ensemble average of `|Tr[ρX]|²`; closed form for the uniform ensemble.
    pub fn second_moment(&self, x: &Operator) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        if self.uniform {
            return Ok(uniform_ensemble_moment(x));
        }
        Ok(self
            .members
            .iter()
            .map(|(rho, w)| w * trace_product(rho, x).norm_sqr())
            .sum())
    }
}

/// Diagonal metric `π_ii = Tr[ρ_E P_i]` on the outcome space.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    diag: Vec<f64>,
    support: Vec<bool>,
}

impl Metric {
    /// Builds a metric from its diagonal. Entries in `[-1e-12, 0)` are
    /// clamped to zero; anything more negative is rejected.
    pub fn from_diag(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Empty("metric"));
        }
        let mut clamped = Vec::with_capacity(diag.len());
        for &v in &diag {
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if v < -SUPPORT_THRESHOLD {
                let sum = diag.iter().sum();
                return Err(Error::InvalidWeights { sum, min: v });
            }
            clamped.push(v.max(0.0));
        }
        let support = clamped.iter().map(|&v| v > SUPPORT_THRESHOLD).collect();
        Ok(Self {
            diag: clamped,
            support,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn support_mask(&self) -> &[bool] {
        &self.support
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.support[i]
    }

    pub fn has_full_support(&self) -> bool {
        self.support.iter().all(|&s| s)
    }

    pub fn total(&self) -> f64 {
        self.diag.iter().sum()
    }

    /// Diagonal with entries outside the support set to exactly zero.
    pub fn effective_diag(&self) -> Vec<f64> {
        self.diag
            .iter()
            .zip(&self.support)
            .map(|(&v, &s)| if s { v } else { 0.0 })
            .collect()
    }
}

/// `π_ii = Re Tr[ρ_E P_i]`.
pub fn metric_from_ensemble(povm: &Povm, ens: &Ensemble) -> Result<Metric> {
    if ens.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: ens.dim(),
        });
    }
    let diag = povm
        .elements
        .iter()
        .map(|p| trace_product(ens.avg_state(), p).re)
        .collect();
    Metric::from_diag(diag)
}
