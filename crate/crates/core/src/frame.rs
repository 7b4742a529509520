//! Frames of POVM elements and their dual frames.
//!
//! The POVM elements `|P_i⟩⟩` form a frame for `S = Span{P_i}`. With the
//! synthesis map `Λ` (columns `|P_i⟩⟩`) and the frame operator `F = ΛΛ†`:
//!
//! * the canonical dual is `|Δ_i⟩⟩ = F‡|P_i⟩⟩`, i.e. `Γ_Δ = Λ†F‡ = Λ‡`;
//! * `M = Γ_Δ Λ`, `M_ij = ⟨⟨Δ_i|P_j⟩⟩`, is the orthogonal projector onto
//!   `Ker(Λ)^⊥` in coefficient space;
//! * every generalized inverse `Γ` of `Λ` (`ΛΓΛ = Λ`) is a dual, with rows
//!   `Γ_{i,·} = conj|D_i⟩⟩`;
//! * the dual minimizing `Σ_i π_ii |⟨⟨D_i|X⟩⟩|²` for every `X` is
//!   `Γ̂ = (I − C) Γ_Δ` with `C = [(I−M)π(I−M)]‡ π M`.
//!
//! `F‡` and `Λ‡` are built from one SVD of `Λ`, so frames that do not span
//! the whole operator space are handled inside `S`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::decomp::{self, pseudo_inverse};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::measurement::{Metric, Povm, HERMITIAN_TOL};
use crate::operator::{synthesis_matrix, Operator, VecOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    Canonical,
    Alternate,
    Optimal,
}

/// Synthesis map, frame operator and derived quantities of a frame.
#[derive(Debug, Clone)]
pub struct FrameData {
    elements: Vec<Operator>,
    lambda: CMatrix,
    frame_op: CMatrix,
    frame_pinv: CMatrix,
    lambda_pinv: CMatrix,
    span_proj: CMatrix,
    null_proj: CMatrix,
    bounds: (f64, f64),
    span_rank: usize,
    hermitian: bool,
}

impl FrameData {
    /// Frame data for an arbitrary list of operators (not necessarily a POVM).
    pub fn from_operators(elements: &[Operator]) -> Result<Self> {
        let lambda = synthesis_matrix(elements)?;
        if !lambda.is_finite() {
            return Err(Error::NonFinite);
        }
        let svd = decomp::svd(&lambda)?;
        let top = svd.sigma.first().copied().unwrap_or(0.0);
        let cutoff = decomp::rank_cutoff(lambda.rows(), lambda.cols(), top, 0.0);
        let rank = svd.sigma.iter().take_while(|&&s| s > cutoff && s > 0.0).count();
        if rank == 0 {
            return Err(Error::ZeroSpan);
        }
        let bounds = (svd.sigma[rank - 1] * svd.sigma[rank - 1], top * top);
        // Everything below comes from the SVD of Λ rather than from F = ΛΛ†,
        // which would square the condition number.
        let (d2, n) = (lambda.rows(), lambda.cols());
        let mut span_proj = CMatrix::zeros(d2, d2);
        let mut frame_pinv = CMatrix::zeros(d2, d2);
        let mut lambda_pinv = CMatrix::zeros(n, d2);
        for k in 0..rank {
            let s = svd.sigma[k];
            for c in 0..d2 {
                let uc = svd.u[(c, k)].conj();
                for r in 0..d2 {
                    let p = svd.u[(r, k)] * uc;
                    span_proj[(r, c)] += p;
                    frame_pinv[(r, c)] += p / (s * s);
                }
                for r in 0..n {
                    lambda_pinv[(r, c)] += svd.v[(r, k)] * uc / s;
                }
            }
        }
        let frame_op = &lambda * &lambda.adjoint();
        let null_proj = null_projector(&lambda, rank)?;
        let hermitian = elements
            .iter()
            .all(|p| p.hermitian_deviation() <= HERMITIAN_TOL);
        Ok(Self {
            elements: elements.to_vec(),
            lambda,
            frame_op,
            frame_pinv,
            lambda_pinv,
            span_proj,
            null_proj,
            bounds,
            span_rank: rank,
            hermitian,
        })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Number of frame elements N.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    /// `Λ`, d² × N, `Λ_{mn,i} = (P_i)_mn`.
    pub fn lambda(&self) -> &CMatrix {
        &self.lambda
    }

    /// `F = Σ_i |P_i⟩⟩⟨⟨P_i|`.
    pub fn frame_op(&self) -> &CMatrix {
        &self.frame_op
    }

    pub fn frame_pinv(&self) -> &CMatrix {
        &self.frame_pinv
    }

    /// `Π_S`.
    pub fn span_proj(&self) -> &CMatrix {
        &self.span_proj
    }

    /// Smallest and largest nonzero eigenvalues of `F`.
    pub fn frame_bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn span_rank(&self) -> usize {
        self.span_rank
    }

    /// True when `S` is the whole operator space.
    pub fn is_informationally_complete(&self) -> bool {
        self.span_rank == self.dim() * self.dim()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `M = Λ†F‡Λ = Λ‡Λ`.
    pub fn gram(&self) -> CMatrix {
        &self.lambda_pinv * &self.lambda
    }

    /// `Π_S|X⟩⟩`.
    pub fn project(&self, x: &Operator) -> Result<Operator> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let v = self.span_proj.mul_vec(x.vectorize().components());
        Operator::devectorize(&VecOperator::new(v))
    }
}

/// Projector onto the kernel of `Λ` from the `N − rank` lowest eigenvectors
/// of `Λ†Λ`. Exactly zero when the elements are linearly independent, where
/// `I − M` would only hold round-off.
fn null_projector(lambda: &CMatrix, rank: usize) -> Result<CMatrix> {
    let n = lambda.cols();
    let mut q = CMatrix::zeros(n, n);
    if rank >= n {
        return Ok(q);
    }
    let eig = decomp::hermitian_eigen(&(&lambda.adjoint() * lambda))?;
    for k in 0..n - rank {
        for r in 0..n {
            let vr = eig.vectors[(r, k)];
            for c in 0..n {
                q[(r, c)] += vr * eig.vectors[(c, k)].conj();
            }
        }
    }
    Ok(q)
}

/// Builds the frame of a POVM.
pub fn build_frame(povm: &Povm) -> Result<FrameData> {
    FrameData::from_operators(povm.elements())
}

/// A dual frame together with its coefficient map `Γ`.
#[derive(Debug, Clone)]
pub struct DualFrame {
    kind: DualKind,
    duals: Vec<Operator>,
    gamma: CMatrix,
    span_proj: CMatrix,
}

impl DualFrame {
    fn from_gamma(kind: DualKind, gamma: CMatrix, fd: &FrameData) -> Result<Self> {
        let duals = (0..gamma.rows())
            .map(|i| {
                let row: Vec<Complex64> = gamma.row(i).iter().map(|z| z.conj()).collect();
                Operator::devectorize(&VecOperator::new(row))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind,
            duals,
            gamma,
            span_proj: fd.span_proj.clone(),
        })
    }

    pub fn kind(&self) -> DualKind {
        self.kind
    }

    pub fn duals(&self) -> &[Operator] {
        &self.duals
    }

    pub fn len(&self) -> usize {
        self.duals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.duals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.duals[0].dim()
    }

    /// `Γ`, N × d², `Γ_{i,mn} = conj((D_i)_mn)`.
    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn span_proj(&self) -> &CMatrix {
        &self.span_proj
    }

    /// `‖Σ_i |P_i⟩⟩⟨⟨D_i| − Π_S‖`.
    pub fn dual_residual(&self, fd: &FrameData) -> f64 {
        (&(&fd.lambda * &self.gamma) - &fd.span_proj).frobenius_norm()
    }

    /// `‖ΛΓΛ − Λ‖`.
    pub fn generalized_inverse_residual(&self, fd: &FrameData) -> f64 {
        (&(&(&fd.lambda * &self.gamma) * &fd.lambda) - &fd.lambda).frobenius_norm()
    }

    pub fn traces(&self) -> Vec<Complex64> {
        self.duals.iter().map(Operator::trace).collect()
    }
}

/// `|Δ_i⟩⟩ = F‡|P_i⟩⟩`.
pub fn canonical_dual(fd: &FrameData) -> Result<DualFrame> {
    // Λ†F‡ = Λ‡
    DualFrame::from_gamma(DualKind::Canonical, fd.lambda_pinv.clone(), fd)
}

/// `M_ij = ⟨⟨Δ_i|P_j⟩⟩`, an orthogonal projector on coefficient space.
#[derive(Debug, Clone)]
pub struct GramProjector {
    m: CMatrix,
    q: CMatrix,
}

impl GramProjector {
    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// `‖M² − M‖ + ‖M − M†‖`.
    pub fn projector_residual(&self) -> f64 {
        (&(&self.m * &self.m) - &self.m).frobenius_norm() + self.m.hermitian_deviation()
    }

    pub fn max_imag(&self) -> f64 {
        self.m.as_slice().iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// `I − M`, the projector onto the kernel of `Λ`.
    pub fn complement(&self) -> &CMatrix {
        &self.q
    }
}

fn require_kind(df: &DualFrame, expected: DualKind) -> Result<()> {
    if df.kind != expected {
        return Err(Error::KindMismatch {
            expected,
            found: df.kind,
        });
    }
    Ok(())
}

fn require_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn gram_projector(fd: &FrameData, cd: &DualFrame) -> Result<GramProjector> {
    require_kind(cd, DualKind::Canonical)?;
    require_len(fd.len(), cd.len())?;
    Ok(GramProjector {
        m: &cd.gamma * &fd.lambda,
        q: fd.null_proj.clone(),
    })
}

/// Alternate dual `|D_i⟩⟩ = |Δ_i⟩⟩ + |Y_i⟩⟩ − Σ_j |Y_j⟩⟩⟨⟨P_j|Δ_i⟩⟩`, with
/// each `Y_i` first projected onto `S`.
pub fn alternate_dual(fd: &FrameData, cd: &DualFrame, ys: &[Operator]) -> Result<DualFrame> {
    require_kind(cd, DualKind::Canonical)?;
    require_len(fd.len(), ys.len())?;
    let n = fd.len();
    let d2 = fd.dim() * fd.dim();
    let mut y_cols = Vec::with_capacity(n);
    for y in ys {
        require_len(fd.dim(), y.dim())?;
        y_cols.push(fd.span_proj.mul_vec(y.vectorize().components()));
    }
    // row i gains Σ_j (I−M)_ij conj(|Y_j⟩⟩)
    let q = &fd.null_proj;
    let mut gamma = cd.gamma.clone();
    for i in 0..n {
        for k in 0..d2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, yj) in y_cols.iter().enumerate() {
                acc += q[(i, j)] * yj[k].conj();
            }
            gamma[(i, k)] += acc;
        }
    }
    DualFrame::from_gamma(DualKind::Alternate, gamma, fd)
}

/// `C = [(I−M)π(I−M)]‡ π M` and the pseudoinverse it contains.
pub(crate) fn optimization_terms(gp: &GramProjector, pi: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let q = gp.complement();
    // The cutoff follows the scale of π, not of (I−M)π(I−M), whose small
    // eigenvalues may be pure round-off.
    let n = pi.rows();
    let pi_max = (0..n).map(|i| pi[(i, i)].re).fold(0.0, f64::max);
    let cutoff = 64.0 * n as f64 * f64::EPSILON * pi_max;
    let inner = pseudo_inverse(&(&(q * pi) * q), cutoff)?;
    let c = &(&inner * pi) * &gp.m;
    Ok((c, inner))
}

fn metric_matrix(metric: &Metric, n: usize) -> Result<CMatrix> {
    require_len(n, metric.len())?;
    if !metric.support_mask().iter().any(|&s| s) {
        return Err(Error::ZeroMetric);
    }
    Ok(CMatrix::from_diag(&metric.effective_diag()))
}

/// Minimum-variance dual for the metric `π`:
/// `D̂_i = Δ_i − Σ_j ([(I−M)π(I−M)]‡ π M)_ij Δ_j`.
///
/// Entries of `π` outside its support are taken as exactly zero.
pub fn optimal_dual(
    fd: &FrameData,
    cd: &DualFrame,
    gp: &GramProjector,
    metric: &Metric,
) -> Result<DualFrame> {
    require_kind(cd, DualKind::Canonical)?;
    require_len(fd.len(), cd.len())?;
    require_len(fd.len(), gp.m.rows())?;
    let pi = metric_matrix(metric, fd.len())?;
    let (c, _) = optimization_terms(gp, &pi)?;
    let gamma = &cd.gamma - &(&c * &cd.gamma);
    DualFrame::from_gamma(DualKind::Optimal, gamma, fd)
}

/// Residuals of the generalized-inverse and minimum-norm conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNormReport {
    /// `‖πΓΛ − Λ†Γ†π‖`.
    pub min_norm_residual: f64,
    /// `‖ΛΓΛ − Λ‖`.
    pub generalized_inverse_residual: f64,
    /// `‖ΛΓ − Π_S‖`.
    pub dual_residual: f64,
    /// Optimal duals only: `‖πΓΛ − (π − π[(I−M)π(I−M)]‡π)‖`.
    pub identity_residual: Option<f64>,
}

pub fn verify_min_norm(fd: &FrameData, df: &DualFrame, metric: &Metric) -> Result<MinNormReport> {
    require_len(fd.len(), df.len())?;
    let pi = metric_matrix(metric, fd.len())?;
    let gl = &df.gamma * &fd.lambda;
    let lhs = &pi * &gl;
    let rhs = &gl.adjoint() * &pi;
    let identity_residual = if df.kind == DualKind::Optimal {
        let gp = GramProjector {
            m: fd.gram(),
            q: fd.null_proj.clone(),
        };
        let (_, inner) = optimization_terms(&gp, &pi)?;
        let target = &pi - &(&(&pi * &inner) * &pi);
        Some((&lhs - &target).frobenius_norm())
    } else {
        None
    };
    Ok(MinNormReport {
        min_norm_residual: (&lhs - &rhs).frobenius_norm(),
        generalized_inverse_residual: df.generalized_inverse_residual(fd),
        dual_residual: df.dual_residual(fd),
        identity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{validate_povm, ValidationMode};
    use alloc::vec;

    fn projective() -> FrameData {
        let povm = validate_povm(
            vec![Operator::matrix_unit(2, 0, 0), Operator::matrix_unit(2, 1, 1)],
            ValidationMode::Strict,
        )
        .unwrap();
        build_frame(&povm).unwrap()
    }

    fn trivial() -> FrameData {
        let half = Operator::identity(2).scale(Complex64::new(0.5, 0.0));
        let povm = validate_povm(vec![half.clone(), half], ValidationMode::Strict).unwrap();
        build_frame(&povm).unwrap()
    }

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a - b).hs_norm() <= tol
    }

    #[test]
    fn projective_frame_is_tight_and_self_dual() {
        let fd = projective();
        let eig = decomp::hermitian_eigen(fd.frame_op()).unwrap().values;
        assert!(eig.iter().zip([0.0, 0.0, 1.0, 1.0]).all(|(a, b)| (a - b).abs() < 1e-14));
        assert_eq!(fd.frame_bounds(), (1.0, 1.0));
        assert_eq!(fd.span_rank(), 2);
        let cd = canonical_dual(&fd).unwrap();
        for (d, p) in cd.duals().iter().zip(fd.elements()) {
            assert!(close(d, p, 1e-14));
        }
        let gp = gram_projector(&fd, &cd).unwrap();
        assert!((gp.matrix() - &CMatrix::identity(2)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn trivial_povm_frame() {
        let fd = trivial();
        assert_eq!(fd.span_rank(), 1);
        let (a, b) = fd.frame_bounds();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        let cd = canonical_dual(&fd).unwrap();
        let half = Operator::identity(2).scale(Complex64::new(0.5, 0.0));
        assert!(cd.duals().iter().all(|d| close(d, &half, 1e-14)));
        assert!(cd.dual_residual(&fd) < 1e-14);
        let gp = gram_projector(&fd, &cd).unwrap();
        let expected = CMatrix::from_fn(2, 2, |_, _| Complex64::new(0.5, 0.0));
        assert!((gp.matrix() - &expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn alternate_with_zero_ys_is_canonical() {
        let fd = trivial();
        let cd = canonical_dual(&fd).unwrap();
        let alt = alternate_dual(&fd, &cd, &[Operator::zeros(2), Operator::zeros(2)]).unwrap();
        assert_eq!(alt.kind(), DualKind::Alternate);
        for (a, c) in alt.duals().iter().zip(cd.duals()) {
            assert!(close(a, c, 1e-15));
        }
    }

    #[test]
    fn alternate_on_linearly_independent_frame_is_canonical() {
        let fd = projective();
        let cd = canonical_dual(&fd).unwrap();
        let alt = alternate_dual(&fd, &cd, &[Operator::pauli_z(), Operator::identity(2)]).unwrap();
        for (a, c) in alt.duals().iter().zip(cd.duals()) {
            assert!(close(a, c, 1e-14));
        }
    }

    #[test]
    fn alternate_of_trivial_povm_changes_coefficients() {
        let fd = trivial();
        let cd = canonical_dual(&fd).unwrap();
        let alt = alternate_dual(&fd, &cd, &[Operator::identity(2), Operator::zeros(2)]).unwrap();
        // D_1 = I/2 + I - I/2 = I, D_2 = I/2 - I/2 = 0
        assert!(close(&alt.duals()[0], &Operator::identity(2), 1e-14));
        assert!(close(&alt.duals()[1], &Operator::zeros(2), 1e-14));
        assert!(alt.dual_residual(&fd) < 1e-14);
    }

    #[test]
    fn optimal_on_projective_is_canonical() {
        let fd = projective();
        let cd = canonical_dual(&fd).unwrap();
        let gp = gram_projector(&fd, &cd).unwrap();
        let metric = Metric::from_diag(vec![0.9, 0.1]).unwrap();
        let od = optimal_dual(&fd, &cd, &gp, &metric).unwrap();
        for (o, c) in od.duals().iter().zip(cd.duals()) {
            assert!(close(o, c, 1e-14));
        }
    }

    #[test]
    fn optimal_for_trivial_povm_with_skewed_metric() {
        // Duals in S are D_i = c_i I with c_1 + c_2 = 1; minimizing
        // π_1|c_1|² + π_2|c_2|² gives c_i ∝ 1/π_i, i.e. c = (0.2, 0.8).
        let fd = trivial();
        let cd = canonical_dual(&fd).unwrap();
        let gp = gram_projector(&fd, &cd).unwrap();
        let metric = Metric::from_diag(vec![0.8, 0.2]).unwrap();
        let od = optimal_dual(&fd, &cd, &gp, &metric).unwrap();
        let report = verify_min_norm(&fd, &od, &metric).unwrap();
        assert!(report.min_norm_residual < 1e-12);
        assert!(report.identity_residual.unwrap() < 1e-12);
        assert!(report.generalized_inverse_residual < 1e-12);
        let expected = [0.2, 0.8];
        for (d, c) in od.duals().iter().zip(expected) {
            assert!(close(d, &Operator::identity(2).scale(Complex64::new(c, 0.0)), 1e-12));
        }
    }

    #[test]
    fn kind_and_metric_errors() {
        let fd = trivial();
        let cd = canonical_dual(&fd).unwrap();
        let alt = alternate_dual(&fd, &cd, &[Operator::identity(2), Operator::zeros(2)]).unwrap();
        assert!(matches!(gram_projector(&fd, &alt), Err(Error::KindMismatch { .. })));
        let gp = gram_projector(&fd, &cd).unwrap();
        let zero = Metric::from_diag(vec![0.0, 0.0]).unwrap();
        assert_eq!(optimal_dual(&fd, &cd, &gp, &zero).unwrap_err(), Error::ZeroMetric);
        let short = Metric::from_diag(vec![1.0]).unwrap();
        assert!(optimal_dual(&fd, &cd, &gp, &short).is_err());
        assert!(alternate_dual(&fd, &cd, &[Operator::zeros(2)]).is_err());
    }

    #[test]
    fn zero_frame_has_no_span() {
        assert_eq!(
            FrameData::from_operators(&[Operator::zeros(2)]).unwrap_err(),
            Error::ZeroSpan
        );
    }
}
