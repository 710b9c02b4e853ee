//! ε-adapted norms.
//!
//! For a matrix `A` with Jordan transform `J` (so `J⁻¹AJ` is in Jordan form) and
//! `ε > 0`, let `D_ε` scale coordinate `i` of every Jordan chain by `ε^{−i}`.
//! Then `p_{A,ε}(x) = h(D_ε J⁻¹ x)` is a norm under which every Jordan block
//! `λI + N` becomes `λI + εN`, so the induced norm of `A` is at most
//! `‖A‖_sp + ε` (and exactly `‖A‖_sp` when all blocks are trivial).
//!
//! Over doubles the Jordan form is ill-posed. It is approximated by a Schur
//! eigenvalue pass, grouping of nearby eigenvalues, an invariant subspace per
//! group, and Jordan chains of the (nearly) nilpotent restriction.

use serde::Serialize;

use crate::equation::C64;
use crate::error::{Error, Result};
use crate::linalg::{c, condition, h_norm, h_op, orthonormalize, singular_values, svd, CMatrix, CVector};
use crate::spectral::group_nearby;

pub const DEFAULT_DIM_CAP: usize = 12;
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e10;

/// Eigenvalue spread admitted inside one group of a `g`-fold eigenvalue.
fn eigen_merge_tolerance(g: usize) -> f64 {
    1e-7f64.max((1e4 * f64::EPSILON).powf(1.0 / g as f64))
}

#[derive(Clone, Debug, Serialize)]
pub struct JordanEigenvalue {
    #[serde(with = "crate::cser")]
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
    /// Block sizes, largest first.
    pub blocks: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct JordanStructure {
    pub eigenvalues: Vec<JordanEigenvalue>,
    /// Columns are Jordan chains: `(A − λ)J_0 = 0`, `(A − λ)J_{i+1} = J_i`.
    pub transform: CMatrix,
    /// `(eigenvalue, chain position)` for each column of `transform`.
    pub layout: Vec<(C64, usize)>,
    /// Largest block size `k`.
    pub k: usize,
    pub condition: f64,
}

impl JordanStructure {
    /// The Jordan matrix `J⁻¹AJ` implied by the layout.
    pub fn jordan_form(&self) -> CMatrix {
        let n = self.layout.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &(lambda, pos)) in self.layout.iter().enumerate() {
            m[(i, i)] = lambda;
            if pos > 0 {
                m[(i - 1, i)] = c(1.0);
            }
        }
        m
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e.value.norm()).fold(0.0, f64::max)
    }
}

fn kernel_basis(m: &CMatrix, dim: usize) -> CMatrix {
    let n = m.ncols();
    svd(m).v.columns(n - dim, dim).into_owned()
}

fn numerical_nullity(m: &CMatrix, tol: f64) -> usize {
    let s = singular_values(m);
    s.iter().filter(|&&v| v <= tol).count()
}

/// Jordan chains of a nilpotent `b` (g×g), as columns in chain order.
fn nilpotent_chains(b: &CMatrix, scale: f64) -> (Vec<CVector>, Vec<usize>) {
    let g = b.nrows();
    let mut powers = vec![CMatrix::identity(g, g)];
    let mut dims = vec![0usize];
    loop {
        let j = powers.len();
        let p = &powers[j - 1] * b;
        let tol = 1e-7 * scale.max(1.0).powi(j as i32);
        let d = numerical_nullity(&p, tol).max(dims[j - 1]);
        powers.push(p);
        dims.push(if j >= g { g } else { d });
        if dims[j] == g {
            break;
        }
        if j > g {
            break;
        }
    }
    let k = dims.len() - 1;
    // blocks of size >= j
    let at_least = |j: usize| if j == 0 || j > k { 0 } else { dims[j] - dims[j - 1] };
    let mut chains: Vec<Vec<CVector>> = Vec::new();
    for j in (1..=k).rev() {
        let new = at_least(j) - at_least(j + 1);
        if new == 0 {
            continue;
        }
        let kj = kernel_basis(&powers[j], dims[j]);
        let mut z_cols: Vec<CVector> = Vec::new();
        if j > 1 {
            let km = kernel_basis(&powers[j - 1], dims[j - 1]);
            z_cols.extend(km.column_iter().map(|c| c.clone_owned()));
        }
        for ch in &chains {
            // member of a longer chain sitting at level j
            z_cols.push(ch[j - 1].clone());
        }
        let projected = if z_cols.is_empty() {
            kj.clone()
        } else {
            let z = orthonormalize(&crate::linalg::columns(&z_cols));
            &kj - &z * (z.adjoint() * &kj)
        };
        let u = svd(&projected).u;
        for i in 0..new {
            let top = u.column(i).clone_owned();
            let mut chain = vec![top.clone()];
            let mut v = top;
            for _ in 1..j {
                v = b * v;
                chain.push(v.clone());
            }
            chain.reverse();
            chains.push(chain);
        }
    }
    chains.sort_by_key(|c| std::cmp::Reverse(c.len()));
    let sizes = chains.iter().map(|c| c.len()).collect();
    (chains.into_iter().flatten().collect(), sizes)
}

/// Numerical generalized eigenstructure of `a`.
pub fn jordan_structure(a: &CMatrix) -> Result<JordanStructure> {
    jordan_structure_with(a, DEFAULT_DIM_CAP, DEFAULT_CONDITION_LIMIT)
}

pub fn jordan_structure_with(a: &CMatrix, dim_cap: usize, condition_limit: f64) -> Result<JordanStructure> {
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(Error::Config("jordan_structure needs a non-empty square matrix".into()));
    }
    if n > dim_cap {
        return Err(Error::Config(format!("matrix dimension {n} exceeds the cap {dim_cap}")));
    }
    let schur = a.clone().try_schur(1e-15, 10_000).ok_or(Error::IllConditionedStructure { condition: f64::INFINITY })?;
    let (_, t) = schur.unpack();
    let eig: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let groups = group_nearby(&eig, eigen_merge_tolerance);
    let scale = h_op(a).max(1.0);

    let mut cols: Vec<CVector> = Vec::new();
    let mut layout = Vec::new();
    let mut eigenvalues = Vec::new();
    for g in groups {
        let alg = g.len();
        let lambda = g.iter().map(|&i| eig[i]).sum::<C64>() / alg as f64;
        let shifted = a - CMatrix::identity(n, n) * lambda;
        let q = if alg == n {
            CMatrix::identity(n, n)
        } else {
            let mut p = shifted.clone();
            for _ in 1..alg {
                p = &p * &shifted;
            }
            kernel_basis(&p, alg)
        };
        let q = orthonormalize(&q);
        let restricted = q.adjoint() * a * &q;
        let b = &restricted - CMatrix::identity(alg, alg) * lambda;
        let (chain_vecs, sizes) = if alg == 1 {
            (vec![CVector::from_element(1, c(1.0))], vec![1])
        } else {
            nilpotent_chains(&b, scale)
        };
        for (size_idx, &size) in sizes.iter().enumerate() {
            let offset: usize = sizes[..size_idx].iter().sum();
            for pos in 0..size {
                cols.push(&q * &chain_vecs[offset + pos]);
                layout.push((lambda, pos));
            }
        }
        eigenvalues.push(JordanEigenvalue { value: lambda, algebraic: alg, geometric: sizes.len(), blocks: sizes });
    }
    let transform = crate::linalg::columns(&cols);
    let cond = condition(&transform);
    if !(cond <= condition_limit) {
        return Err(Error::IllConditionedStructure { condition: cond });
    }
    let k = eigenvalues.iter().flat_map(|e| e.blocks.iter().copied()).max().unwrap_or(1);
    eigenvalues.sort_by(|x, y| y.value.norm().partial_cmp(&x.value.norm()).unwrap());
    Ok(JordanStructure { eigenvalues, transform, layout, k, condition: cond })
}

/// `p_{A,ε}(x) = h(S x)` with `S = D_ε J⁻¹`.
#[derive(Clone, Debug)]
pub struct AdaptedNorm {
    pub matrix: CMatrix,
    pub epsilon: f64,
    pub transform: CMatrix,
    pub transform_inverse: CMatrix,
    pub jordan_block_max: usize,
    /// `γ*(A) = max(h~(J), h~(J⁻¹))`.
    pub gamma_star: f64,
    pub spectral_radius: f64,
    /// Smallest eigenvalue modulus, `‖A⁻¹‖_sp⁻¹`.
    pub min_modulus: f64,
    /// `p~_{A,ε}(A)`.
    pub induced_norm: f64,
    pub constants: ComparisonConstants,
    pub structure: JordanStructure,
}

/// Effective constants of the four comparison inequalities, reported separately:
/// `p ≤ c_upper·max(1,1/ε)^{k−1} h`, `h ≤ c_lower·max(1,ε)^{k−1} p`, and
/// `c_operator` for both operator-norm comparisons.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ComparisonConstants {
    pub c_upper: f64,
    pub c_lower: f64,
    pub c_operator: f64,
}

fn sign_k(k: usize) -> f64 {
    if k > 1 {
        1.0
    } else {
        0.0
    }
}

impl AdaptedNorm {
    pub fn eval(&self, x: &CVector) -> f64 {
        h_norm(&(&self.transform * x))
    }

    /// Induced operator norm `p~_{A,ε}(B) = h~(S B S⁻¹)`.
    pub fn induced(&self, b: &CMatrix) -> f64 {
        h_op(&(&self.transform * b * &self.transform_inverse))
    }

    fn k_minus_one(&self) -> i32 {
        self.jordan_block_max as i32 - 1
    }

    /// Right-hand sides of the comparisons for a vector `x` / a matrix `b`:
    /// `(γ* max(1,1/ε)^{k−1} h(x), γ* max(1,ε)^{k−1} p(x))`.
    pub fn vector_bounds(&self, x: &CVector) -> (f64, f64) {
        let e = self.epsilon;
        let km1 = self.k_minus_one();
        (
            self.gamma_star * (1f64.max(1.0 / e)).powi(km1) * h_norm(x),
            self.gamma_star * (1f64.max(e)).powi(km1) * self.eval(x),
        )
    }

    pub fn operator_bounds(&self, b: &CMatrix) -> (f64, f64) {
        let e = self.epsilon;
        let f = self.gamma_star.powi(2) * e.max(1.0 / e).powi(self.k_minus_one());
        (f * h_op(b), f * self.induced(b))
    }

    /// Upper end of the operator-norm bracket, `‖A‖_sp + sign(k−1) ε`.
    pub fn operator_upper(&self) -> f64 {
        self.spectral_radius + sign_k(self.jordan_block_max) * self.epsilon
    }
}

pub fn build_adapted_norm(a: &CMatrix, epsilon: f64) -> Result<AdaptedNorm> {
    let structure = jordan_structure(a)?;
    adapted_norm_from_structure(a, structure, epsilon)
}

pub fn adapted_norm_from_structure(a: &CMatrix, structure: JordanStructure, epsilon: f64) -> Result<AdaptedNorm> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let j = &structure.transform;
    let j_inv = j.clone().try_inverse().ok_or(Error::IllConditionedStructure { condition: f64::INFINITY })?;
    let n = j.nrows();
    let mut d = CMatrix::zeros(n, n);
    let mut d_inv = CMatrix::zeros(n, n);
    for (i, &(_, pos)) in structure.layout.iter().enumerate() {
        d[(i, i)] = c(epsilon.powi(-(pos as i32)));
        d_inv[(i, i)] = c(epsilon.powi(pos as i32));
    }
    let transform = &d * &j_inv;
    let transform_inverse = j * &d_inv;
    let hj = h_op(j);
    let hji = h_op(&j_inv);
    let gamma_star = hj.max(hji);
    let spectral_radius = structure.spectral_radius();
    let min_modulus = structure.eigenvalues.iter().map(|e| e.value.norm()).fold(f64::INFINITY, f64::min);
    let induced_norm = h_op(&(&transform * a * &transform_inverse));
    Ok(AdaptedNorm {
        matrix: a.clone(),
        epsilon,
        transform,
        transform_inverse,
        jordan_block_max: structure.k,
        gamma_star,
        spectral_radius,
        min_modulus,
        induced_norm,
        constants: ComparisonConstants { c_upper: hji, c_lower: hj, c_operator: hj * hji },
        structure,
    })
}

/// `p~_{A,ε}(A⁻¹)`, checked against `[‖A⁻¹‖_sp, (‖A⁻¹‖_sp⁻¹ − sign(k−1)ε)⁻¹]`.
pub fn adapted_inverse_norm_bound(norm: &AdaptedNorm) -> Result<f64> {
    let scale = h_op(&norm.matrix).max(f64::MIN_POSITIVE);
    if norm.min_modulus <= 1e-13 * scale {
        return Err(Error::Singular);
    }
    let inv = norm.matrix.clone().try_inverse().ok_or(Error::Singular)?;
    let gap = sign_k(norm.jordan_block_max) * norm.epsilon;
    if !(norm.min_modulus > gap) {
        return Err(Error::EnvelopeGap { inverse_radius: norm.min_modulus, epsilon: norm.epsilon });
    }
    let value = norm.induced(&inv);
    let lower = 1.0 / norm.min_modulus;
    let upper = 1.0 / (norm.min_modulus - gap);
    let slack = 1e-8 * upper.max(1.0) * norm.structure.condition.max(1.0).sqrt();
    if value < lower - slack || value > upper + slack {
        return Err(Error::IllConditionedStructure { condition: norm.structure.condition });
    }
    Ok(value)
}
