//! Operators on a d-dimensional Hilbert space and their double-ket vectors.
//!
//! An operator `A = Σ A_mn |m⟩⟨n|` corresponds to the bipartite vector
//! `|A⟩⟩ = Σ A_mn |m⟩|n⟩`; component `m·d + n` of the vector is `A_mn`, which
//! is exactly the row-major storage of the matrix. Under this map the
//! Hilbert–Schmidt product `Tr[A†B]` becomes the Euclidean product `⟨⟨A|B⟩⟩`.

use alloc::vec::Vec;
use core::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use num_traits::Float;

use crate::decomp;
use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// Square complex matrix in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(CMatrix);

/// Double-ket `|A⟩⟩` of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct VecOperator(Vec<Complex64>);

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        if matrix.rows() == 0 {
            return Err(Error::Empty("operator"));
        }
        Ok(Self(matrix))
    }

    /// Builds a `dim × dim` operator from row-major entries.
    pub fn from_row_major(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        Self::new(CMatrix::from_row_major(dim, dim, entries)?)
    }

    /// Convenience constructor from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(dim, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn projector(psi: &[Complex64]) -> Self {
        let d = psi.len();
        Self(CMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj()))
    }

    /// `|i⟩⟨j|`.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn pauli_x() -> Self {
        Self::from_real(2, &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let z = Complex64::new(0.0, 0.0);
        Self::from_row_major(2, alloc::vec![z, -i, i, z]).expect("2x2")
    }

    pub fn pauli_z() -> Self {
        Self::from_real(2, &[1.0, 0.0, 0.0, -1.0]).expect("2x2")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.scale(s))
    }

    /// Hilbert–Schmidt norm `sqrt(Tr[A†A])`.
    pub fn hs_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.0.hermitian_deviation()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(decomp::hermitian_eigen(&self.0)?.values)
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn vectorize(&self) -> VecOperator {
        VecOperator(self.0.as_slice().to_vec())
    }

    pub fn devectorize(v: &VecOperator) -> Result<Self> {
        let n = v.0.len();
        let d = isqrt(n).ok_or(Error::NotSquareLength(n))?;
        if d == 0 {
            return Err(Error::Empty("vector"));
        }
        Self::from_row_major(d, v.0.clone())
    }

    pub fn try_mul(&self, rhs: &Operator) -> Result<Operator> {
        check_dims(self, rhs)?;
        Ok(Self(&self.0 * &rhs.0))
    }
}

fn isqrt(n: usize) -> Option<usize> {
    let r = Float::sqrt(n as f64).round() as usize;
    (r * r == n).then_some(r)
}

fn check_dims(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

impl Index<(usize, usize)> for Operator {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl VecOperator {
    pub fn new(components: Vec<Complex64>) -> Self {
        Self(components)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_components(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        Float::sqrt(self.0.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    /// `⟨⟨self|other⟩⟩`, antilinear in `self`.
    pub fn dot(&self, other: &VecOperator) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Hilbert–Schmidt product `Tr[A†B]`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<Complex64> {
    check_dims(a, b)?;
    Ok(a
        .0
        .as_slice()
        .iter()
        .zip(b.0.as_slice())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Moore–Penrose pseudoinverse `Z‡`. `rank_tol = 0` selects the default
/// cutoff `max(rows, cols)·ε·σ_max`; a positive value is an absolute
/// singular-value cutoff.
pub fn moore_penrose(z: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    decomp::pseudo_inverse(z, rank_tol)
}

/// Synthesis matrix whose columns are `|ops_i⟩⟩` (d² × N).
pub fn synthesis_matrix(ops: &[Operator]) -> Result<CMatrix> {
    let first = ops.first().ok_or(Error::Empty("operator list"))?;
    for op in ops {
        check_dims(first, op)?;
    }
    let cols: Vec<Vec<Complex64>> = ops.iter().map(|op| op.vectorize().0).collect();
    CMatrix::from_columns(&cols)
}

/// Orthogonal projector onto `Span{|ops_i⟩⟩}` as a d² × d² matrix.
pub fn span_projector(ops: &[Operator]) -> Result<CMatrix> {
    let lambda = synthesis_matrix(ops)?;
    let svd = decomp::svd(&lambda)?;
    let cutoff = decomp::rank_cutoff(
        lambda.rows(),
        lambda.cols(),
        svd.sigma.first().copied().unwrap_or(0.0),
        0.0,
    );
    let n = lambda.rows();
    let mut proj = CMatrix::zeros(n, n);
    for (k, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        for r in 0..n {
            let ur = svd.u[(r, k)];
            for c in 0..n {
                proj[(r, c)] += ur * svd.u[(c, k)].conj();
            }
        }
    }
    Ok(proj)
}
