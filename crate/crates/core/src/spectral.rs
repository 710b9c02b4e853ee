//! Characteristic polynomial, its roots, and the modulus clustering
//! `ρ_1 > … > ρ_s > ρ_{s+1} = 0` with multiplicity data `e_i`, `k_i`, `k`, `k*`.

use serde::{Deserialize, Serialize};

use crate::equation::{PoincareEquation, C64};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;
/// Roots closer than this (relative) are always the same root.
pub const ROOT_MERGE_TOL: f64 = 1e-7;
/// Roots below this modulus belong to the zero cluster.
pub const ZERO_ROOT_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;

/// `T(z) = Σ ã_k z^k`, ascending coefficients.
pub fn characteristic_polynomial(eq: &PoincareEquation) -> Vec<C64> {
    eq.limits()
}

/// Monic polynomial with the given roots (ascending coefficients).
pub fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        p = next;
    }
    p
}

pub fn poly_eval(p: &[C64], z: C64) -> C64 {
    p.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_eval_with_derivative(p: &[C64], z: C64) -> (C64, C64) {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Rounding-error level of `p(z)`: `Σ |c_k| |z|^k`.
fn eval_scale(p: &[C64], z: C64) -> f64 {
    let r = z.norm();
    p.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_product(factors: &[Vec<C64>]) -> Vec<C64> {
    factors.iter().fold(vec![C64::new(1.0, 0.0)], |acc, f| poly_mul(&acc, f))
}

/// A distinct root with its multiplicity and the residual `|T(λ)|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Root {
    #[serde(with = "crate::cser")]
    pub value: C64,
    pub multiplicity: usize,
    pub residual: f64,
}

fn aberth(p: &[C64]) -> (Vec<C64>, bool) {
    let n = p.len() - 1;
    // radius from the Fujiwara bound, shrunk toward the geometric mean of the roots
    let lead = p[n];
    let fujiwara = (0..n)
        .map(|k| (p[k] / lead).norm().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        * 2.0;
    let geo = (p[0] / lead).norm().powf(1.0 / n as f64);
    let radius = if geo > 0.0 { geo.min(fujiwara).max(1e-3) } else { (fujiwara * 0.5).max(1e-3) };
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            C64::from_polar(radius, t)
        })
        .collect();
    let mut done = vec![false; n];
    for _ in 0..MAX_ITERATIONS {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, d) = poly_eval_with_derivative(p, z[i]);
            if v.norm() <= 4.0 * f64::EPSILON * eval_scale(p, z[i]) {
                done[i] = true;
                continue;
            }
            let w = v / d;
            let s: C64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = w / (C64::new(1.0, 0.0) - w * s);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            if step.norm() <= 1e-16 * z[i].norm().max(1e-300) {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return (z, true);
        }
    }
    (z, false)
}

fn companion_roots(p: &[C64]) -> Option<Vec<C64>> {
    let n = p.len() - 1;
    let lead = p[n];
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i + 1)] = C64::new(1.0, 0.0);
    }
    for k in 0..n {
        a[(n - 1, k)] = -p[k] / lead;
    }
    let schur = a.try_schur(1e-15, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

/// Groups approximations of multiple roots. A `g`-fold root perturbs to a
/// ring of radius about `eps^(1/g)`, so the admissible spread grows with `g`.
pub(crate) fn merge_tolerance(g: usize) -> f64 {
    ROOT_MERGE_TOL.max(4.0 * f64::EPSILON.powf(1.0 / g as f64))
}

pub(crate) fn group_nearby(values: &[C64], tol_for: impl Fn(usize) -> f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut free: Vec<bool> = vec![true; n];
    let mut groups = Vec::new();
    // seed from the largest admissible group around each value
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].norm().partial_cmp(&values[a].norm()).unwrap().then(a.cmp(&b)));
    for &i in &order {
        if !free[i] {
            continue;
        }
        let mut near: Vec<usize> = (0..n).filter(|&j| free[j]).collect();
        near.sort_by(|&a, &b| (values[a] - values[i]).norm().partial_cmp(&(values[b] - values[i]).norm()).unwrap());
        let mut chosen = vec![i];
        for g in (2..=near.len()).rev() {
            let cand = &near[..g];
            let mean = cand.iter().map(|&j| values[j]).sum::<C64>() / g as f64;
            let spread = cand.iter().map(|&j| (values[j] - mean).norm()).fold(0.0, f64::max);
            if spread <= tol_for(g) * mean.norm().max(1.0) {
                chosen = cand.to_vec();
                break;
            }
        }
        for &j in &chosen {
            free[j] = false;
        }
        groups.push(chosen);
    }
    groups
}

fn derivative(p: &[C64]) -> Vec<C64> {
    p.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect()
}

/// A `g`-fold root is a simple root of `p^(g−1)`; Newton there is well conditioned.
fn polish_multiple(p: &[C64], start: C64, g: usize) -> C64 {
    let mut d = p.to_vec();
    for _ in 1..g {
        d = derivative(&d);
    }
    let mut z = start;
    for _ in 0..20 {
        let (v, dv) = poly_eval_with_derivative(&d, z);
        if dv.norm() == 0.0 {
            break;
        }
        let step = v / dv;
        if !(step.norm() < 1e-3 * z.norm().max(1.0)) {
            // wandered off; keep the cluster mean
            return start;
        }
        z -= step;
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    z
}

/// All roots of a monic polynomial with multiplicities.
pub fn find_roots(poly: &[C64]) -> Result<Vec<Root>> {
    let n = poly.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::InvalidEquation("polynomial must have degree at least one".into()));
    }
    let (mut approx, converged) = aberth(poly);
    if !converged {
        match companion_roots(poly) {
            Some(r) => approx = r,
            None => return Err(Error::RootsNotConverged { iterations: MAX_ITERATIONS, partial: approx }),
        }
    }
    // exact zeros are common (T(0) = 0); snap them
    let trailing_zeros = poly.iter().take_while(|c| c.norm() == 0.0).count();
    if trailing_zeros > 0 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| approx[a].norm().partial_cmp(&approx[b].norm()).unwrap());
        for &i in idx.iter().take(trailing_zeros) {
            approx[i] = C64::new(0.0, 0.0);
        }
    }
    let groups = group_nearby(&approx, merge_tolerance);
    let mut roots: Vec<Root> = groups
        .into_iter()
        .map(|g| {
            let mean = g.iter().map(|&j| approx[j]).sum::<C64>() / g.len() as f64;
            let value = if g.len() > 1 && mean.norm() > 0.0 { polish_multiple(poly, mean, g.len()) } else { mean };
            Root { value, multiplicity: g.len(), residual: poly_eval(poly, value).norm() }
        })
        .collect();
    roots.sort_by(|a, b| {
        b.value.norm().partial_cmp(&a.value.norm()).unwrap().then(b.value.arg().partial_cmp(&a.value.arg()).unwrap())
    });
    Ok(roots)
}

/// One modulus level `ρ_i` with `e_i` (multiplicity sum) and `k_i` (max multiplicity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCluster {
    pub rho: f64,
    pub mult_sum: usize,
    pub mult_max: usize,
    pub roots: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroCluster {
    /// `k*`, multiplicity of the root zero.
    pub k_star: usize,
    pub mult_sum: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharacteristicProfile {
    #[serde(with = "crate::cser::vec")]
    pub poly_coeffs: Vec<C64>,
    pub roots: Vec<Root>,
    /// Nonzero clusters, `ρ` strictly decreasing.
    pub clusters: Vec<ModulusCluster>,
    pub zero_cluster: ZeroCluster,
    /// `k = max(k_1, …, k_s)`; zero when `s = 0`.
    pub k_global: usize,
    pub cluster_tolerance: f64,
    pub warnings: Vec<String>,
}

impl CharacteristicProfile {
    pub fn from_equation(eq: &PoincareEquation, tol: f64) -> Result<Self> {
        let poly = characteristic_polynomial(eq);
        let roots = find_roots(&poly)?;
        let mut p = cluster_moduli(&roots, tol)?;
        p.poly_coeffs = poly;
        Ok(p)
    }

    pub fn order(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Number `s` of nonzero clusters.
    pub fn s(&self) -> usize {
        self.clusters.len()
    }

    /// `ρ_θ` for `θ ∈ 1..=s+1` (one-based; `ρ_{s+1} = 0`).
    pub fn rho(&self, theta: usize) -> f64 {
        if theta <= self.s() {
            self.clusters[theta - 1].rho
        } else {
            0.0
        }
    }

    /// `e_θ`, one-based, including the zero cluster at `s+1`.
    pub fn e(&self, theta: usize) -> usize {
        if theta <= self.s() {
            self.clusters[theta - 1].mult_sum
        } else {
            self.zero_cluster.mult_sum
        }
    }

    pub fn k(&self, theta: usize) -> usize {
        if theta <= self.s() {
            self.clusters[theta - 1].mult_max
        } else {
            self.zero_cluster.k_star
        }
    }

    pub fn k_star(&self) -> usize {
        self.zero_cluster.k_star
    }

    /// `dim V^∧_θ = e_θ + … + e_{s+1}`.
    pub fn slow_dim(&self, theta: usize) -> usize {
        (theta..=self.s() + 1).map(|i| self.e(i)).sum()
    }

    /// Monic factor `T_θ(z) = Π_{|λ| = ρ_θ} (z − λ)^mult`.
    pub fn cluster_poly(&self, theta: usize) -> Vec<C64> {
        let mut roots = Vec::new();
        if theta <= self.s() {
            for &i in &self.clusters[theta - 1].roots {
                roots.extend(std::iter::repeat_n(self.roots[i].value, self.roots[i].multiplicity));
            }
        } else {
            roots.extend(std::iter::repeat_n(C64::new(0.0, 0.0), self.zero_cluster.mult_sum));
        }
        poly_from_roots(&roots)
    }
}

/// Groups roots into modulus levels at relative gap `tol`.
pub fn cluster_moduli(roots: &[Root], tol: f64) -> Result<CharacteristicProfile> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("cluster tolerance must be positive, got {tol}")));
    }
    let mut warnings = Vec::new();
    let mut zero = ZeroCluster::default();
    let mut idx: Vec<usize> = Vec::new();
    for (i, r) in roots.iter().enumerate() {
        if r.value.norm() < ZERO_ROOT_TOL {
            zero.k_star = zero.k_star.max(r.multiplicity);
            zero.mult_sum += r.multiplicity;
        } else {
            idx.push(i);
        }
    }
    idx.sort_by(|&a, &b| roots[b].value.norm().partial_cmp(&roots[a].value.norm()).unwrap().then(a.cmp(&b)));

    let mut clusters: Vec<ModulusCluster> = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    let mut top = 0.0;
    let flush = |members: &mut Vec<usize>, clusters: &mut Vec<ModulusCluster>| {
        if members.is_empty() {
            return;
        }
        let weight: usize = members.iter().map(|&i| roots[i].multiplicity).sum();
        let rho = members.iter().map(|&i| roots[i].value.norm() * roots[i].multiplicity as f64).sum::<f64>()
            / weight as f64;
        let mult_max = members.iter().map(|&i| roots[i].multiplicity).max().unwrap();
        clusters.push(ModulusCluster { rho, mult_sum: weight, mult_max, roots: std::mem::take(members) });
    };
    for &i in &idx {
        let r = roots[i].value.norm();
        if let Some(&prev) = members.last() {
            let pr = roots[prev].value.norm();
            let gap = (pr - r) / pr;
            if gap >= tol {
                if gap < 2.0 * tol {
                    warnings.push(format!("cluster boundary between moduli {pr:.6e} and {r:.6e} is within 2x of the tolerance"));
                }
                flush(&mut members, &mut clusters);
            } else if (top - r) / top >= tol {
                warnings.push(format!("cluster at modulus {top:.6e} spans more than the tolerance by chaining"));
            }
        }
        if members.is_empty() {
            top = r;
        }
        members.push(i);
    }
    flush(&mut members, &mut clusters);
    let k_global = clusters.iter().map(|c| c.mult_max).max().unwrap_or(0);
    Ok(CharacteristicProfile {
        poly_coeffs: poly_from_roots(
            &roots.iter().flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity)).collect::<Vec<_>>(),
        ),
        roots: roots.to_vec(),
        clusters,
        zero_cluster: zero,
        k_global,
        cluster_tolerance: tol,
        warnings,
    })
}
