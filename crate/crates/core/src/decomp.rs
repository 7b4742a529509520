//! Jacobi-type decompositions: Hermitian eigensolver and one-sided SVD.
//!
//! Both are cyclic Jacobi sweeps. They converge quadratically, are accurate
//! to a few ulps relative to the largest eigen/singular value, and need no
//! workspace beyond a copy of the input. Dimensions here are small (operator
//! spaces of qudits), so the O(n³) per-sweep cost is irrelevant.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `H = V diag(λ) V†`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors.
    pub vectors: CMatrix,
}

/// Thin SVD `A = U diag(σ) V†`, singular values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// Unit phase `e^{iφ}` of `z`, or 1 when `z` is zero.
fn phase(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// `t = tan θ` of the smaller rotation zeroing the coupling `g` between
/// diagonal entries `a` and `b`.
fn jacobi_tangent(a: f64, b: f64, g: f64) -> f64 {
    let zeta = (b - a) / (2.0 * g);
    let t = 1.0 / (zeta.abs() + Float::sqrt(1.0 + zeta * zeta));
    if zeta < 0.0 {
        -t
    } else {
        t
    }
}

/// Eigen-decomposition of a Hermitian matrix. Only the Hermitian part of
/// `h` is used.
pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: h.cols(),
        });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = h.rows();
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(HermitianEigen {
            values: alloc::vec![0.0; n],
            vectors: v,
        });
    }

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if Float::sqrt(off) <= f64::EPSILON * scale * 1e-2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let hpq = a[(p, q)];
                let g = hpq.norm();
                if g <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let t = jacobi_tangent(app, aqq, g);
                let c = 1.0 / Float::sqrt(1.0 + t * t);
                let s = c * t;
                // J = diag(1, e^{-iφ}) · [[c, s], [-s, c]] acting on (p, q).
                let e = phase(hpq).conj();
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = e * -s;
                let jqq = e * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Thin singular value decomposition of an arbitrary complex matrix
/// (one-sided Hestenes–Jacobi).
pub fn svd(a: &CMatrix) -> Result<Svd> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    if a.rows() < a.cols() {
        let Svd { u, sigma, v } = svd_tall(&a.adjoint());
        return Ok(Svd { u: v, sigma, v: u });
    }
    Ok(svd_tall(a))
}

/// Requires `rows >= cols`.
fn svd_tall(a: &CMatrix) -> Svd {
    let m = a.rows();
    let n = a.cols();
    // Work on columns stored contiguously.
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = alloc::vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let tol = f64::EPSILON * 4.0;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = cols[p]
                    .iter()
                    .zip(&cols[q])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g <= tol * Float::sqrt(alpha * beta) || g <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let t = jacobi_tangent(alpha, beta, g);
                let c = 1.0 / Float::sqrt(1.0 + t * t);
                let s = c * t;
                let e = phase(gamma).conj();
                for k in 0..m {
                    let xp = cols[p][k];
                    let xq = cols[q][k] * e;
                    cols[p][k] = xp * c - xq * s;
                    cols[q][k] = xp * s + xq * c;
                }
                for k in 0..n {
                    let vp = vcols[p][k];
                    let vq = vcols[q][k] * e;
                    vcols[p][k] = vp * c - vq * s;
                    vcols[q][k] = vp * s + vq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|c| Float::sqrt(c.iter().map(|z| z.norm_sqr()).sum::<f64>()))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = CMatrix::from_fn(m, n, |r, c| {
        let j = order[c];
        if norms[j] > 0.0 {
            cols[j][r] / norms[j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let v = CMatrix::from_fn(n, n, |r, c| vcols[order[c]][r]);
    Svd { u, sigma, v }
}

/// Singular-value cutoff: `rank_tol` when positive, otherwise
/// `max(rows, cols) · ε · σ_max`.
pub fn rank_cutoff(rows: usize, cols: usize, sigma_max: f64, rank_tol: f64) -> f64 {
    if rank_tol > 0.0 {
        rank_tol
    } else {
        rows.max(cols) as f64 * f64::EPSILON * sigma_max
    }
}

/// Moore–Penrose pseudoinverse of a (possibly rectangular) matrix.
pub fn pseudo_inverse(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    if !(rank_tol >= 0.0) || !rank_tol.is_finite() {
        return Err(Error::NonFinite);
    }
    let Svd { u, sigma, v } = svd(a)?;
    let cutoff = rank_cutoff(a.rows(), a.cols(), sigma.first().copied().unwrap_or(0.0), rank_tol);
    let mut out = CMatrix::zeros(a.cols(), a.rows());
    for (k, &s) in sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for r in 0..a.cols() {
            let vr = v[(r, k)] * inv;
            for c in 0..a.rows() {
                out[(r, c)] += vr * u[(c, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Numerical rank using the default cutoff.
pub fn rank(a: &CMatrix) -> Result<usize> {
    let s = svd(a)?.sigma;
    let cutoff = rank_cutoff(a.rows(), a.cols(), s.first().copied().unwrap_or(0.0), 0.0);
    Ok(s.iter().filter(|&&x| x > cutoff && x > 0.0).count())
}
