//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use povm_core::{CMatrix, Complex64, Operator};

/// Exact rational number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Q {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Q {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0);
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Q { num: s * num / g, den: s * den / g }
    }
    pub fn int(n: i128) -> Self {
        Q::new(n, 1)
    }
    pub fn add(self, o: Q) -> Q {
        Q::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    pub fn sub(self, o: Q) -> Q {
        self.add(Q::new(-o.num, o.den))
    }
    pub fn mul(self, o: Q) -> Q {
        Q::new(self.num * o.num, self.den * o.den)
    }
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Exact complex rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CQ {
    pub re: Q,
    pub im: Q,
}

impl CQ {
    pub fn new(re: Q, im: Q) -> Self {
        CQ { re, im }
    }
    pub fn over(re: i128, im: i128, den: i128) -> Self {
        CQ::new(Q::new(re, den), Q::new(im, den))
    }
    pub fn zero() -> Self {
        CQ::over(0, 0, 1)
    }
    pub fn add(self, o: CQ) -> CQ {
        CQ::new(self.re.add(o.re), self.im.add(o.im))
    }
    pub fn mul(self, o: CQ) -> CQ {
        CQ::new(
            self.re.mul(o.re).sub(self.im.mul(o.im)),
            self.re.mul(o.im).add(self.im.mul(o.re)),
        )
    }
    pub fn conj(self) -> CQ {
        CQ::new(self.re, Q::new(-self.im.num, self.im.den))
    }
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

pub type RatMatrix = [[CQ; 2]; 2];

/// The five-outcome qubit POVM exactly as printed.
pub fn example_rational() -> Vec<RatMatrix> {
    let d = 1197;
    vec![
        [[CQ::over(64, 0, d), CQ::over(-16, 0, d)], [CQ::over(-16, 0, d), CQ::over(40, 0, d)]],
        [[CQ::over(34, 0, d), CQ::over(2, -32, d)], [CQ::over(2, 32, d), CQ::over(34, 0, d)]],
        [[CQ::over(281, 0, 399), CQ::over(-18, 32, d)], [CQ::over(-18, -32, d), CQ::over(289, 0, 399)]],
        [[CQ::over(64, 0, 399), CQ::over(64, -64, d)], [CQ::over(64, 64, d), CQ::over(32, 0, 399)]],
        [[CQ::over(64, 0, d), CQ::over(-32, -64, d)], [CQ::over(-32, 64, d), CQ::over(160, 0, d)]],
    ]
}

/// Printed POVM with element `k` (0-based) complex-conjugated.
pub fn example_rational_conjugated(k: usize) -> Vec<RatMatrix> {
    let mut els = example_rational();
    for row in els[k].iter_mut() {
        for e in row.iter_mut() {
            *e = e.conj();
        }
    }
    els
}

pub fn to_operator(m: &RatMatrix) -> Operator {
    Operator::from_row_major(2, m.iter().flatten().map(|e| e.to_c64()).collect()).unwrap()
}

pub fn example_operators() -> Vec<Operator> {
    example_rational().iter().map(to_operator).collect()
}

/// Completeness-restoring variant (fifth element conjugated) whose values
/// match the published ones.
pub fn example_operators_conj5() -> Vec<Operator> {
    example_rational_conjugated(4).iter().map(to_operator).collect()
}

pub fn example_operators_conj4() -> Vec<Operator> {
    example_rational_conjugated(3).iter().map(to_operator).collect()
}

pub fn example_x() -> Operator {
    Operator::from_row_major(
        2,
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-2.24, 1.0),
            Complex64::new(-2.24, -1.0),
            Complex64::new(-1.0, 0.0),
        ],
    )
    .unwrap()
}

pub fn half_identity(d: usize) -> Operator {
    Operator::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0))
}

/// Inverse of a nonsingular square matrix by Gauss–Jordan elimination with
/// partial pivoting. Independent of the SVD/Jacobi code under test.
pub fn gauss_jordan_inverse(a: &CMatrix) -> CMatrix {
    let n = a.rows();
    assert!(a.is_square());
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|r| {
            let mut row: Vec<Complex64> = a.row(r).to_vec();
            row.extend((0..n).map(|c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0)));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        assert!(m[piv][col].norm() > 1e-300, "singular matrix");
        m.swap(col, piv);
        let p = m[col][col];
        for x in m[col].iter_mut() {
            *x /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != Complex64::new(0.0, 0.0) {
                    let pivot_row = m[col].clone();
                    for (x, y) in m[r].iter_mut().zip(pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    CMatrix::from_fn(n, n, |r, c| m[r][n + c])
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> CMatrix {
    &gauss_jordan_inverse(a) * b
}

/// Basis of the null space of `a` (columns) via reduced row echelon form.
pub fn null_space(a: &CMatrix, tol: f64) -> CMatrix {
    let rows = a.rows();
    let cols = a.cols();
    let mut m: Vec<Vec<Complex64>> = (0..rows).map(|r| a.row(r).to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let piv = (r..rows)
            .max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm()))
            .unwrap();
        if m[piv][c].norm() <= tol {
            continue;
        }
        m.swap(r, piv);
        let p = m[r][c];
        for x in m[r].iter_mut() {
            *x /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = m[i][c];
                let pr = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(pr) {
                    *x -= f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = CMatrix::zeros(cols, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis[(f, k)] = Complex64::new(1.0, 0.0);
        for (row, &p) in pivots.iter().enumerate() {
            basis[(p, k)] = -m[row][f];
        }
    }
    basis
}

/// Max-abs elementwise distance between operators.
pub fn op_dist(a: &Operator, b: &Operator) -> f64 {
    (a - b).matrix().max_abs()
}
