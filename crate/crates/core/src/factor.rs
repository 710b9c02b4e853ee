//! Factorization of a restricted operator into monic factors graded by root
//! modulus, fastest cluster first.
//!
//! The kernel of the first factor is a dominant subspace of the solution space.
//! It is carried forward as a sequence of orthonormal frames of window vectors,
//! and the factor coefficients at `ν` solve the Casorati system of the frame at
//! `ν`. Right division leaves a cofactor whose solution space holds the slower
//! clusters, and the process repeats on it. The last factor is what remains
//! after the final division; for a zero cluster this is the only way to reach
//! it, since its solutions decay too fast to be iterated.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equation::{CoefficientSequence, DecayClass, PoincareEquation, Rule, SolutionTrajectory, C64};
use crate::error::{Error, Result};
use crate::filtration::{random_complex, DEFAULT_ANGLE_TOL, DEFAULT_SEED};
use crate::linalg::{condition, orthonormalize, singular_values, subspace_angle, CMatrix};
use crate::operator::{compose, divide_right_on, DifferenceOperator};
use crate::spectral::{characteristic_polynomial, find_roots, CharacteristicProfile, Root, DEFAULT_CLUSTER_TOL};

pub const DEFAULT_FACTOR_HORIZON: u64 = 1000;
pub const CASORATI_COND_LIMIT: f64 = 1e10;
/// Largest working offset tried before giving up.
pub const MAX_WORKING_OFFSET: u64 = 10_000;

/// Orthonormal frames `Q_ν` of a propagated `p`-dimensional space of windows.
#[derive(Clone, Debug)]
pub struct DominantBasis {
    pub start: u64,
    pub frames: Vec<CMatrix>,
    /// Angle at the last index between this propagation and one from a random start.
    pub convergence_angle: f64,
}

impl DominantBasis {
    pub fn dim(&self) -> usize {
        self.frames[0].ncols()
    }

    pub fn frame(&self, nu: u64) -> &CMatrix {
        &self.frames[(nu - self.start) as usize]
    }

    /// Solutions with the columns of the first frame as initial windows.
    pub fn trajectories(&self, eq: &PoincareEquation, len: usize) -> Result<Vec<SolutionTrajectory>> {
        let q = &self.frames[0];
        (0..q.ncols())
            .map(|j| {
                let w: Vec<C64> = q.column(j).iter().copied().collect();
                eq.solve(self.start, &w, len)
            })
            .collect()
    }
}

/// Columns spanning the generalized eigenvectors of the companion matrix for `roots`.
fn spectral_vectors(roots: &[&Root], n: usize) -> CMatrix {
    let mut cols = Vec::new();
    for root in roots {
        for j in 0..root.multiplicity {
            // j-th derivative of (λ^k)_k divided by j!
            let v: Vec<C64> = (0..n)
                .map(|k| if k < j { C64::new(0.0, 0.0) } else { binomial(k, j) * root.value.powu((k - j) as u32) })
                .collect();
            cols.push(v);
        }
    }
    let p = cols.len();
    orthonormalize(&CMatrix::from_fn(n, p, |i, j| cols[j][i]))
}

fn binomial(k: usize, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

fn propagate(eq: &PoincareEquation, init: &CMatrix, start: u64, len: u64, seed: u64) -> Result<DominantBasis> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, p) = init.shape();
    let mut q = init.clone();
    let mut other = orthonormalize(&CMatrix::from_fn(n, p, |_, _| random_complex(&mut rng)));
    let mut frames = Vec::with_capacity(len as usize + 1);
    frames.push(q.clone());
    for nu in start..start + len {
        let a = eq.companion_matrix(nu)?;
        q = (&a * &q).qr().q();
        other = (&a * &other).qr().q();
        frames.push(q.clone());
    }
    let convergence_angle = subspace_angle(&q, &other);
    Ok(DominantBasis { start, frames, convergence_angle })
}

/// Frames of the `dim`-dimensional dominant solution space over `[m, m + horizon]`.
pub fn dominant_subspace_basis(eq: &PoincareEquation, dim: usize, horizon: u64) -> Result<DominantBasis> {
    let n = eq.order();
    if dim == 0 || dim > n {
        return Err(Error::Config(format!("dimension must lie in 1..={n}, got {dim}")));
    }
    let mut roots = find_roots(&characteristic_polynomial(eq))?;
    roots.sort_by(|a, b| b.value.norm().total_cmp(&a.value.norm()));
    let mut chosen = Vec::new();
    let mut count = 0;
    for r in &roots {
        if count >= dim {
            break;
        }
        chosen.push(r);
        count += r.multiplicity;
    }
    if count != dim {
        return Err(Error::Config(format!("dimension {dim} splits a repeated root")));
    }
    if dim < n {
        let inner = chosen.last().unwrap().value.norm();
        let outer = roots[chosen.len()].value.norm();
        if inner - outer <= DEFAULT_CLUSTER_TOL * inner.max(1.0) {
            return Err(Error::Config(format!("no modulus gap after the {dim} largest roots")));
        }
    }
    let basis = propagate(eq, &spectral_vectors(&chosen, n), eq.start_offset(), horizon, DEFAULT_SEED)?;
    if basis.convergence_angle > DEFAULT_ANGLE_TOL {
        return Err(Error::NonConverged { dim, angle: basis.convergence_angle });
    }
    Ok(basis)
}

/// Solves `Σ_{r<p} b_r c[r, j] = −rhs_j`.
///
/// Columns are normalized to at most unit size, so `1/σ_min` also bounds the
/// amplification and catches a basis solution passing through zero.
fn casorati_solve(c: &CMatrix, rhs: &CMatrix, nu: u64) -> Result<(Vec<C64>, f64)> {
    let sv = singular_values(c);
    let smin = sv.last().copied().unwrap_or(0.0);
    let cond = condition(c).max(1.0 / smin);
    if !(cond <= CASORATI_COND_LIMIT) {
        return Err(Error::CasoratianDegenerate { index: nu, condition: cond });
    }
    let b = c.transpose().lu().solve(&(-rhs.transpose())).ok_or(Error::CasoratianDegenerate { index: nu, condition: f64::INFINITY })?;
    Ok((b.iter().copied().collect(), cond))
}

/// Casorati system of a frame: rows `0..p` of `Q_ν` and the next window entry.
fn frame_coefficients(eq: &PoincareEquation, q: &CMatrix, nu: u64) -> Result<(Vec<C64>, f64)> {
    let (n, p) = q.shape();
    let c = q.rows(0, p).into_owned();
    let rhs = if p < n { q.rows(p, 1).into_owned() } else { (eq.companion_matrix(nu)? * q).rows(n - 1, 1).into_owned() };
    casorati_solve(&c, &rhs, nu)
}

/// Monic degree-`p` operator annihilating the given solutions on `[m, m + horizon]`.
pub fn casoratian_annihilator(basis: &[SolutionTrajectory], m: u64, horizon: u64) -> Result<DifferenceOperator> {
    let p = basis.len();
    if p == 0 {
        return Err(Error::Config("empty basis".into()));
    }
    let mut table: Vec<Vec<C64>> = vec![Vec::with_capacity(horizon as usize + 1); p];
    for nu in m..=m + horizon {
        let mut c = CMatrix::zeros(p, p);
        let mut rhs = CMatrix::zeros(1, p);
        for (j, y) in basis.iter().enumerate() {
            let vals: Vec<_> = (0..=p as u64)
                .map(|i| y.get(nu + i).ok_or(Error::Range { from: nu, to: nu + p as u64 + 1, start: y.start, end: y.end() }))
                .collect::<Result<_>>()?;
            let scale = vals.iter().map(|v| v.ln_abs).fold(f64::NEG_INFINITY, f64::max);
            for (i, v) in vals.iter().enumerate() {
                let z = v.rescaled(scale);
                if i < p {
                    c[(i, j)] = z;
                } else {
                    rhs[(0, j)] = z;
                }
            }
        }
        let (b, _) = casorati_solve(&c, &rhs, nu)?;
        for (r, v) in b.into_iter().enumerate() {
            table[r].push(v);
        }
    }
    let mut coeffs: Vec<_> = table
        .into_iter()
        .map(|values| {
            let last = *values.last().unwrap();
            CoefficientSequence::new(tabulated(m, values, last), Some(last), DecayClass::VanishingOnly, None)
        })
        .collect();
    coeffs.push(CoefficientSequence::constant(C64::new(1.0, 0.0)));
    DifferenceOperator::new(coeffs, m)
}

fn tabulated(start: u64, values: Vec<C64>, tail: C64) -> Rule {
    Rule::Tabulated { start, values: Arc::new(values), tail: Box::new(Rule::Constant(tail)) }
}

/// `L` from a least-squares fit of `L + c/(ν+1) + d/(ν+1)²` to `(ν, b(ν))`.
fn fit_limit(series: &[(u64, C64)]) -> C64 {
    let x = DMatrix::<f64>::from_fn(series.len(), 3, |i, j| (series[i].0 as f64 + 1.0).powi(-(j as i32)));
    let y = DMatrix::<f64>::from_fn(series.len(), 2, |i, j| if j == 0 { series[i].1.re } else { series[i].1.im });
    let sol = x.svd(true, true).solve(&y, 1e-300).expect("full svd");
    C64::new(sol[(0, 0)], sol[(0, 1)])
}

#[derive(Clone, Debug, Serialize)]
pub struct CoefficientSample {
    pub nu: u64,
    #[serde(with = "crate::cser::vec")]
    pub values: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorSummary {
    /// Cluster index; `s + 1` for the zero cluster.
    pub theta: usize,
    pub degree: usize,
    /// `T_θ(z)`, ascending.
    #[serde(with = "crate::cser::vec")]
    pub target: Vec<C64>,
    /// Limits recovered from the tail of the factor coefficients.
    #[serde(with = "crate::cser::vec")]
    pub limits: Vec<C64>,
    pub limit_error: f64,
    /// `max ν |b_r(ν) − b̃_r|` over the working range; absent without `O(1/ν)` inputs.
    pub decay_fit: Option<f64>,
    pub invertible_bottom: bool,
    /// Angle between propagations from two starts; absent for the last factor.
    pub convergence_angle: Option<f64>,
    pub max_casorati_condition: Option<f64>,
    pub samples: Vec<CoefficientSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Factorization {
    /// `β_1, …, β_{s+1}`; `β_1` acts first.
    #[serde(skip)]
    pub factors: Vec<DifferenceOperator>,
    pub working_offset: u64,
    pub horizon: u64,
    pub summaries: Vec<FactorSummary>,
    /// `max |coeffs(β_last ∘ … ∘ β_1) − coeffs(α)|` over the working range.
    pub residual: f64,
}

impl Factorization {
    pub fn target_polys(&self) -> Vec<Vec<C64>> {
        self.summaries.iter().map(|s| s.target.clone()).collect()
    }

    pub fn decay_fits(&self) -> Option<Vec<f64>> {
        self.summaries.iter().map(|s| s.decay_fit).collect()
    }

    /// `β_last ∘ … ∘ β_1`.
    pub fn composed(&self) -> DifferenceOperator {
        let mut chain = self.factors[0].clone();
        for beta in &self.factors[1..] {
            chain = compose(beta, &chain);
        }
        chain
    }
}

/// Perron factorization of `eq` restricted to the smallest working offset at
/// which every Casorati matrix is well conditioned.
pub fn factorize(eq: &PoincareEquation, profile: &CharacteristicProfile, horizon: u64) -> Result<Factorization> {
    if profile.s() == 0 {
        return Err(Error::Class("factorization needs a nonzero root".into()));
    }
    if profile.order() != eq.order() {
        return Err(Error::Config(format!("profile has order {}, equation {}", profile.order(), eq.order())));
    }
    let mut m = eq.start_offset();
    loop {
        match factorize_at(eq, profile, horizon, m) {
            Err(Error::CasoratianDegenerate { .. }) if (2 * m).max(1) <= MAX_WORKING_OFFSET => m = (2 * m).max(1),
            other => return other,
        }
    }
}

struct FactorStats {
    limits: Vec<C64>,
    decay_fit: Option<f64>,
    samples: Vec<CoefficientSample>,
}

fn factor_stats(beta: &DifferenceOperator, m: u64, horizon: u64, decay: DecayClass) -> FactorStats {
    let p = beta.degree();
    let tail_from = m + horizon / 2;
    let limits: Vec<C64> = (0..=p)
        .map(|r| {
            let series: Vec<_> = (tail_from..=m + horizon).map(|nu| (nu, beta.coeff(r, nu))).collect();
            if series.iter().all(|s| s.1 == series[0].1) {
                series[0].1
            } else {
                fit_limit(&series)
            }
        })
        .collect();
    let decay_fit = (decay != DecayClass::VanishingOnly).then(|| {
        (m.max(1)..=m + horizon)
            .flat_map(|nu| (0..p).map(move |r| (nu, r)))
            .map(|(nu, r)| nu as f64 * (beta.coeff(r, nu) - limits[r]).norm())
            .fold(0.0, f64::max)
    });
    let samples = [m, m + 1, m + 10, m + 100, m + horizon]
        .into_iter()
        .filter(|&nu| nu <= m + horizon)
        .map(|nu| CoefficientSample { nu, values: (0..=p).map(|r| beta.coeff(r, nu)).collect() })
        .collect();
    FactorStats { limits, decay_fit, samples }
}

/// Copies the coefficients on `[m, m + len)` into tables with the limit as tail.
fn tabulate(op: &DifferenceOperator, m: u64, len: u64) -> Result<DifferenceOperator> {
    let limits = op.limits().ok_or_else(|| Error::Class("cofactor has a coefficient without limit".into()))?;
    let d = op.degree();
    let mut coeffs: Vec<_> = (0..d)
        .map(|r| {
            let values = (m..m + len).map(|nu| op.coeff(r, nu)).collect();
            let seq = &op.coefficients()[r];
            CoefficientSequence::new(tabulated(m, values, limits[r]), Some(limits[r]), seq.decay_class(), None)
        })
        .collect();
    coeffs.push(CoefficientSequence::constant(C64::new(1.0, 0.0)));
    DifferenceOperator::new(coeffs, m)
}

fn factorize_at(eq: &PoincareEquation, profile: &CharacteristicProfile, horizon: u64, m: u64) -> Result<Factorization> {
    let n = eq.order();
    let s = profile.s();
    let decay = eq.decay_class();
    let mut thetas: Vec<usize> = (1..=s).collect();
    if profile.e(s + 1) > 0 {
        thetas.push(s + 1);
    }
    let step = n as u64 + 2;
    let mut span = horizon + (thetas.len() as u64 + 1) * step;
    let alpha = DifferenceOperator::from_equation(eq).restrict(m)?;
    let mut current = alpha.clone();
    let mut factors = Vec::new();
    let mut summaries = Vec::new();

    for (i, &theta) in thetas.iter().enumerate() {
        let target = profile.cluster_poly(theta);
        let last = i + 1 == thetas.len();
        let (beta, angle, cond) = if last {
            (current.clone(), None, None)
        } else {
            let p = profile.e(theta);
            let cluster: Vec<&Root> = profile.clusters[theta - 1].roots.iter().map(|&r| &profile.roots[r]).collect();
            let eqc = current.to_equation()?;
            let nc = eqc.order();
            let basis = propagate(&eqc, &spectral_vectors(&cluster, nc), m, span, DEFAULT_SEED + i as u64)?;
            if basis.convergence_angle > DEFAULT_ANGLE_TOL {
                return Err(Error::NonConverged { dim: p, angle: basis.convergence_angle });
            }
            let mut table: Vec<Vec<C64>> = vec![Vec::with_capacity(span as usize + 1); p];
            let mut worst: f64 = 0.0;
            for nu in m..=m + span {
                let (b, cond) = frame_coefficients(&eqc, basis.frame(nu), nu)?;
                worst = worst.max(cond);
                for (r, v) in b.into_iter().enumerate() {
                    table[r].push(v);
                }
            }
            let raw = build_factor(table, m, decay, None)?;
            let stats = factor_stats(&raw, m, horizon, decay);
            let declared = if decay == DecayClass::VanishingOnly { target.clone() } else { stats.limits.clone() };
            let beta = if decay == DecayClass::Exact {
                DifferenceOperator::new(declared.iter().map(|&l| CoefficientSequence::constant(l)).collect(), m)?
            } else {
                let table = (0..p).map(|r| (m..=m + span).map(|nu| raw.coeff(r, nu)).collect()).collect();
                build_factor(table, m, decay, Some(&declared))?
            };
            (beta, Some(basis.convergence_angle), Some(worst))
        };
        let stats = factor_stats(&beta, m, horizon, decay);
        let limit_error = stats.limits.iter().zip(&target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        summaries.push(FactorSummary {
            theta,
            degree: beta.degree(),
            target,
            limits: stats.limits,
            limit_error,
            decay_fit: stats.decay_fit,
            invertible_bottom: beta.flags().invertible_bottom,
            convergence_angle: angle,
            max_casorati_condition: cond,
            samples: stats.samples,
        });
        if !last {
            let eta = divide_right_on(&current, &beta, horizon)?;
            span -= step;
            current = if decay == DecayClass::Exact { eta } else { tabulate(&eta, m, span + step)? };
        }
        factors.push(beta);
    }

    let mut out = Factorization { factors, working_offset: m, horizon, summaries, residual: 0.0 };
    let chain = out.composed();
    out.residual = (m..m + horizon)
        .flat_map(|nu| (0..=n).map(move |k| (nu, k)))
        .map(|(nu, k)| (chain.coeff(k, nu) - alpha.coeff(k, nu)).norm())
        .fold(0.0, f64::max);
    Ok(out)
}

fn build_factor(table: Vec<Vec<C64>>, m: u64, decay: DecayClass, limits: Option<&[C64]>) -> Result<DifferenceOperator> {
    let mut coeffs: Vec<_> = table
        .into_iter()
        .enumerate()
        .map(|(r, values)| {
            let tail = limits.map(|l| l[r]).unwrap_or(*values.last().unwrap());
            CoefficientSequence::new(tabulated(m, values, tail), Some(tail), decay, None)
        })
        .collect();
    coeffs.push(CoefficientSequence::constant(C64::new(1.0, 0.0)));
    DifferenceOperator::new(coeffs, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::spectral::DEFAULT_CLUSTER_TOL;

    fn profile(eq: &PoincareEquation) -> CharacteristicProfile {
        CharacteristicProfile::from_equation(eq, DEFAULT_CLUSTER_TOL).unwrap()
    }

    #[test]
    fn dominant_fibonacci_direction() {
        let fib = PoincareEquation::constant(&[c(-1.0), c(-1.0)]);
        let basis = dominant_subspace_basis(&fib, 1, 200).unwrap();
        let y = &basis.trajectories(&fib, 120).unwrap()[0];
        let ratio = y.value(101).unwrap() / y.value(100).unwrap();
        assert!((ratio - c((1.0 + 5f64.sqrt()) / 2.0)).norm() < 1e-8);

        let eq = PoincareEquation::constant(&[c(2.0), c(-3.0)]);
        let q = dominant_subspace_basis(&eq, 1, 100).unwrap();
        let two = CMatrix::from_column_slice(2, 1, &[c(1.0), c(2.0)]);
        assert!(subspace_angle(q.frame(0), &two) < 1e-12);
        assert!(dominant_subspace_basis(&eq, 2, 10).is_ok());
    }

    #[test]
    fn casoratian_examples() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let powers = |r: f64| SolutionTrajectory::from_values(0, 2, &(0..80).map(|k| c(r.powi(k))).collect::<Vec<_>>());
        let op = casoratian_annihilator(&[powers(phi), powers(-1.0 / phi)], 0, 60).unwrap();
        for nu in [0, 30, 60] {
            assert!((op.coeff(0, nu) - c(-1.0)).norm() < 1e-9);
            assert!((op.coeff(1, nu) - c(-1.0)).norm() < 1e-9);
        }
        let twos = PoincareEquation::constant(&[c(-2.0)]).solve(0, &[c(1.0)], 20).unwrap();
        let op = casoratian_annihilator(&[twos], 0, 10).unwrap();
        assert!((op.coeff(0, 5) - c(-2.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_two_and_one() {
        let eq = PoincareEquation::constant(&[c(2.0), c(-3.0)]);
        let f = factorize(&eq, &profile(&eq), 200).unwrap();
        assert_eq!(f.factors.len(), 2);
        assert!((f.factors[0].coeff(0, 0) - c(-2.0)).norm() < 1e-12);
        assert!((f.factors[1].coeff(0, 0) - c(-1.0)).norm() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn perturbed_example() {
        let a1 = CoefficientSequence::rational(vec![c(-2.0), c(-3.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu);
        let eq = PoincareEquation::new(vec![CoefficientSequence::constant(c(2.0)), a1, CoefficientSequence::constant(c(1.0))], 0).unwrap();
        let f = factorize(&eq, &profile(&eq), 1000).unwrap();
        assert!((f.summaries[0].limits[0] - c(-2.0)).norm() < 1e-3);
        assert!((f.summaries[1].limits[0] - c(-1.0)).norm() < 1e-3);
        let fits = f.decay_fits().unwrap();
        assert!(fits.iter().all(|x| x.is_finite() && *x < 1e3), "{fits:?}");
        assert!(f.residual < 1e-6, "{}", f.residual);
    }

    #[test]
    fn zero_cluster_by_division() {
        let a0 = CoefficientSequence::rational(vec![c(1.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu);
        let eq = PoincareEquation::new(vec![a0, CoefficientSequence::constant(c(-1.0)), CoefficientSequence::constant(c(1.0))], 0).unwrap();
        let f = factorize(&eq, &profile(&eq), 500).unwrap();
        assert_eq!(f.summaries.iter().map(|s| s.degree).sum::<usize>(), 2);
        assert!(f.summaries[0].invertible_bottom);
        assert!(f.summaries[1].limit_error < 1e-3);
        assert!(f.residual < 1e-6);
    }
}
