//! Small dense helpers over complex matrices.
//!
//! `h` is the max-norm on vectors and `h~` its induced operator norm (maximal
//! absolute row sum). Subspaces are passed as matrices whose columns span them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::equation::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Max-norm `h(x)`.
pub fn h_norm(v: &CVector) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Operator norm induced by the max-norm.
pub fn h_op(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Full SVD `m = U diag(s) V^H` with `s` sorted descending.
///
/// nalgebra's complex SVD loses accuracy on rank-deficient input, so this goes
/// through faer.
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Svd {
    let (r, k) = m.shape();
    if r == 0 || k == 0 {
        return Svd { u: CMatrix::identity(r, r), s: Vec::new(), v: CMatrix::identity(k, k) };
    }
    let f = faer::Mat::<faer::c64>::from_fn(r, k, |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im));
    let d = f.svd().expect("svd of a finite matrix");
    let (u, s, v) = (d.U(), d.S(), d.V());
    let s: Vec<f64> = (0..s.dim()).map(|i| s[i].re).collect();
    Svd {
        u: CMatrix::from_fn(r, r, |i, j| C64::new(u[(i, j)].re, u[(i, j)].im)),
        s,
        v: CMatrix::from_fn(k, k, |i, j| C64::new(v[(i, j)].re, v[(i, j)].im)),
    }
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    svd(m).s
}

/// 2-norm condition number; `inf` for singular input.
pub fn condition(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis of the column span (columns are assumed independent).
pub fn orthonormalize(m: &CMatrix) -> CMatrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    m.clone().qr().q()
}

/// Orthonormal basis of the orthogonal complement of the span of `m`'s columns.
pub fn orthogonal_complement(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    if m.ncols() == 0 {
        return CMatrix::identity(n, n);
    }
    let q = orthonormalize(m);
    let rank = q.ncols().min(n);
    let proj = CMatrix::identity(n, n) - &q * q.adjoint();
    svd(&proj).u.columns(0, n - rank).into_owned()
}

/// Largest principal angle needed to rotate span(`a`) into span(`b`):
/// `asin ‖(I − P_b) Q_a‖₂`. Zero iff span(a) ⊆ span(b).
pub fn containment_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let qa = orthonormalize(a);
    if b.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let qb = orthonormalize(b);
    let resid = &qa - &qb * (qb.adjoint() * &qa);
    let s = singular_values(&resid).first().copied().unwrap_or(0.0);
    s.min(1.0).asin()
}

/// Symmetric largest principal angle between two subspaces of equal dimension.
pub fn subspace_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    containment_angle(a, b).max(containment_angle(b, a))
}

/// Smallest principal angle; zero iff the subspaces intersect nontrivially.
pub fn min_principal_angle(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.ncols() == 0 || b.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let cos = singular_values(&(qa.adjoint() * &qb)).first().copied().unwrap_or(0.0);
    // acos is badly conditioned near 1; use the sine of the residual instead
    if cos > 0.9 {
        let d = svd(&(qa.adjoint() * &qb));
        let va = &qa * d.u.column(0);
        let resid = &va - &qb * (qb.adjoint() * &va);
        return resid.norm().min(1.0).asin();
    }
    cos.min(1.0).acos()
}

pub fn columns(cols: &[CVector]) -> CMatrix {
    let n = cols.first().map(|c| c.len()).unwrap_or(0);
    CMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}
