#![allow(dead_code)]

use std::sync::Arc;

use plab::adapted::{adapted_inverse_norm_bound, build_adapted_norm};
use plab::equation::Rule;
use plab::linalg::{c, condition, h_norm, h_op, orthonormalize, CMatrix, CVector};
use plab::operator::{compose, DifferenceOperator};
use plab::{CoefficientSequence, DecayClass, Error, PoincareEquation, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cplx(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn phi() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

pub fn fibonacci() -> PoincareEquation {
    PoincareEquation::constant(&[c(-1.0), c(-1.0)])
}

/// `z² − z` with `a_0(ν) = 1/(ν+1)`.
pub fn zero_cluster_example() -> PoincareEquation {
    let a0 = CoefficientSequence::rational(vec![c(1.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu);
    PoincareEquation::new(vec![a0, CoefficientSequence::constant(c(-1.0)), CoefficientSequence::constant(c(1.0))], 0).unwrap()
}

/// `z² − 3z + 2` with `a_1(ν) = −3 + scale/ln(ν+2)`.
pub fn inverse_log_example(scale: f64) -> PoincareEquation {
    let a1 = CoefficientSequence::new(Rule::InverseLog { offset: c(-3.0), scale: c(scale) }, Some(c(-3.0)), DecayClass::VanishingOnly, None);
    PoincareEquation::new(vec![CoefficientSequence::constant(c(2.0)), a1, CoefficientSequence::constant(c(1.0))], 0).unwrap()
}

/// `t + d/(ν + 1 + δ)`, with limit `t`.
pub fn perturbed(t: C64, d: C64, delta: f64) -> CoefficientSequence {
    CoefficientSequence::rational(vec![t * (1.0 + delta) + d, t], vec![c(1.0 + delta), c(1.0)], DecayClass::InverseNu)
}

pub fn random_sequence(rng: &mut ChaCha8Rng) -> CoefficientSequence {
    if rng.gen_bool(0.3) {
        CoefficientSequence::constant(cplx(rng))
    } else {
        perturbed(cplx(rng), cplx(rng), rng.gen_range(0.0..5.0))
    }
}

/// Operator of degree `d` with random convergent coefficients; monic on request.
pub fn random_operator(rng: &mut ChaCha8Rng, d: usize, monic: bool) -> DifferenceOperator {
    let mut coeffs: Vec<_> = (0..d).map(|_| random_sequence(rng)).collect();
    coeffs.push(if monic {
        CoefficientSequence::constant(c(1.0))
    } else {
        perturbed(C64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..std::f64::consts::TAU)), cplx(rng), rng.gen_range(0.0..5.0))
    });
    DifferenceOperator::new(coeffs, 0).unwrap()
}

/// Distinct roots with moduli at least 15% apart, optionally one zero root.
pub fn separated_roots(rng: &mut ChaCha8Rng, n: usize, allow_zero: bool) -> Vec<C64> {
    loop {
        let mut mods: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
        mods.sort_by(|a, b| b.total_cmp(a));
        if mods.windows(2).all(|w| w[1] < 0.85 * w[0]) {
            let mut roots: Vec<C64> = mods.iter().map(|&r| C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))).collect();
            if allow_zero && n > 1 && rng.gen_bool(0.25) {
                roots[n - 1] = c(0.0);
            }
            return roots;
        }
    }
}

/// Span of the eigenvectors `(1, λ, …, λ^{n−1})` for the given roots.
pub fn eigen_span(roots: &[C64], n: usize) -> CMatrix {
    orthonormalize(&CMatrix::from_fn(n, roots.len(), |i, j| roots[j].powu(i as u32)))
}

pub struct PlantedFactorization {
    pub equation: PoincareEquation,
    /// `T_i` per factor, fastest first, ascending coefficients.
    pub targets: Vec<Vec<C64>>,
}

/// `α = β_s ∘ … ∘ β_1` with monic `β_i = T_i + O(1/ν)`, fastest `T_i` first.
pub fn planted_factorization(rng: &mut ChaCha8Rng) -> PlantedFactorization {
    let count = rng.gen_range(2..=3);
    let mut mods: Vec<f64> = Vec::new();
    while mods.len() < count {
        let r = rng.gen_range(0.4..3.0);
        if mods.iter().all(|&m: &f64| (m / r).ln().abs() > 0.4) {
            mods.push(r);
        }
    }
    mods.sort_by(|a, b| b.total_cmp(a));
    let mut factors = Vec::new();
    let mut targets = Vec::new();
    for &r in &mods {
        let deg = if count == 2 { rng.gen_range(1..=2) } else { 1 };
        let roots: Vec<C64> = (0..deg).map(|_| C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))).collect();
        let target = plab::spectral::poly_from_roots(&roots);
        let mut coeffs: Vec<_> = target[..deg]
            .iter()
            .map(|&t| perturbed(t, cplx(rng) * rng.gen_range(0.0..10.0), rng.gen_range(0.0..3.0)))
            .collect();
        coeffs.push(CoefficientSequence::constant(c(1.0)));
        factors.push(DifferenceOperator::new(coeffs, 0).unwrap());
        targets.push(target);
    }
    let mut chain = factors[0].clone();
    for beta in &factors[1..] {
        chain = compose(beta, &chain);
    }
    PlantedFactorization { equation: chain.to_equation().unwrap(), targets }
}

pub struct PlantedJordan {
    pub a: CMatrix,
    pub radius: f64,
    pub min_modulus: f64,
    pub k: usize,
    pub simple: bool,
}

pub fn planted_jordan(rng: &mut ChaCha8Rng, n: usize) -> PlantedJordan {
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.gen_range(1..=left.min(3));
        sizes.push(s);
        left -= s;
    }
    let mut eigs: Vec<C64> = Vec::new();
    for i in 0..sizes.len() {
        if i > 0 && rng.gen_bool(0.15) {
            eigs.push(eigs[i - 1]);
            continue;
        }
        loop {
            let z = C64::from_polar(rng.gen_range(0.3..3.0), rng.gen_range(0.0..std::f64::consts::TAU));
            if eigs.iter().all(|e| (e - z).norm() > 0.3) {
                eigs.push(z);
                break;
            }
        }
    }
    let mut jm = CMatrix::zeros(n, n);
    let mut at = 0;
    for (&s, &l) in sizes.iter().zip(&eigs) {
        for p in 0..s {
            jm[(at + p, at + p)] = l;
            if p > 0 {
                jm[(at + p - 1, at + p)] = c(1.0);
            }
        }
        at += s;
    }
    let t = loop {
        let t = CMatrix::from_fn(n, n, |_, _| cplx(rng));
        if condition(&t) <= 1e4 {
            break t;
        }
    };
    let a = &t * jm * t.clone().try_inverse().unwrap();
    let mut distinct = eigs.clone();
    distinct.dedup();
    PlantedJordan {
        a,
        radius: eigs.iter().map(|e| e.norm()).fold(0.0, f64::max),
        min_modulus: eigs.iter().map(|e| e.norm()).fold(f64::INFINITY, f64::min),
        k: *sizes.iter().max().unwrap(),
        simple: sizes.iter().all(|&s| s == 1) && distinct.len() == eigs.len(),
    }
}

/// Comparison inequalities, operator-norm bracket, simple-spectrum equality and
/// the inverse bound on 100 planted matrices per `n ∈ 2..=6`.
pub fn planted_jordan_violations(seed: u64) -> Vec<String> {
    let mut rng = rng(seed);
    let mut violations = Vec::new();
    for n in 2..=6 {
        for trial in 0..100 {
            let p = planted_jordan(&mut rng, n);
            let eps = 10f64.powf(rng.gen_range(-1.0..1.0));
            let norm = match build_adapted_norm(&p.a, eps) {
                Ok(v) => v,
                Err(e) => {
                    violations.push(format!("n={n} #{trial}: {e}"));
                    continue;
                }
            };
            if norm.jordan_block_max != p.k {
                violations.push(format!("n={n} #{trial}: k {} vs planted {}", norm.jordan_block_max, p.k));
            }
            for _ in 0..10 {
                let x = CVector::from_fn(n, |_, _| cplx(&mut rng));
                let (up, low) = norm.vector_bounds(&x);
                if norm.eval(&x) > up * (1.0 + 1e-10) || h_norm(&x) > low * (1.0 + 1e-10) {
                    violations.push(format!("n={n} #{trial}: vector comparison"));
                }
                let b = CMatrix::from_fn(n, n, |_, _| cplx(&mut rng));
                let (up, low) = norm.operator_bounds(&b);
                if norm.induced(&b) > up * (1.0 + 1e-10) || h_op(&b) > low * (1.0 + 1e-10) {
                    violations.push(format!("n={n} #{trial}: operator comparison"));
                }
            }
            let sign = if p.k > 1 { 1.0 } else { 0.0 };
            let lo = norm.induced_norm - p.radius;
            let hi = p.radius + sign * eps - norm.induced_norm;
            if lo < -1e-10 || hi < -1e-10 {
                violations.push(format!("n={n} #{trial}: bracket {lo:.3e} {hi:.3e} k={} eps={eps}", p.k));
            }
            if p.simple && norm.induced_norm - p.radius > 1e-10 {
                violations.push(format!("n={n} #{trial}: simple spectrum gap {:.3e}", norm.induced_norm - p.radius));
            }
            if p.min_modulus > sign * eps {
                match adapted_inverse_norm_bound(&norm) {
                    Ok(v) => {
                        let upper = 1.0 / (p.min_modulus - sign * eps);
                        if v < 1.0 / p.min_modulus - 1e-10 || v > upper + 1e-10 * upper {
                            violations.push(format!("n={n} #{trial}: inverse bound {v}"));
                        }
                    }
                    Err(e @ Error::IllConditionedStructure { .. }) | Err(e @ Error::EnvelopeGap { .. }) => {
                        violations.push(format!("n={n} #{trial}: inverse {e}"))
                    }
                    Err(e) => violations.push(format!("n={n} #{trial}: {e}")),
                }
            }
        }
    }
    violations
}

/// Closure-backed coefficient with a declared limit.
pub fn custom(f: impl Fn(u64) -> C64 + Send + Sync + 'static, limit: C64) -> CoefficientSequence {
    CoefficientSequence::new(Rule::Custom(Arc::new(f)), Some(limit), DecayClass::VanishingOnly, None)
}
