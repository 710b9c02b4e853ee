//! Difference operators `α = Σ_{k=0}^{d} μ_{a_k} ∘ ∇^k` over scalar sequences.
//!
//! `∇` is the shift `(∇y)(ν) = y(ν+1)` and `μ_a` multiplication by the
//! sequence `a`, so `(αy)(ν) = Σ a_k(ν) y(ν+k)`. Composition does not commute:
//! `μ_b ∇^r ∘ μ_c ∇^s = μ_{b · ∇^r c} ∇^{r+s}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::equation::{CoefficientSequence, CoefficientSpec, DecayClass, PoincareEquation, SolutionTrajectory, C64};
use crate::error::{Error, Result};

/// Indices sampled when checking class membership.
pub const CLASS_SAMPLE: u64 = 256;
/// Default working range of [`divide_right`].
pub const DEFAULT_DIVISION_RANGE: u64 = 1000;
pub const DIVISION_TOL: f64 = 1e-9;

/// Membership in the operator classes used by the factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassFlags {
    /// Top coefficient `≡ 1`.
    pub monic: bool,
    /// `a_0(ν) ≠ 0` for `ν ≥ m − 1`.
    pub invertible_bottom: bool,
    /// Every coefficient has a limit.
    pub convergent: bool,
    /// Every coefficient approaches its limit like `O(1/(ν+1))`.
    pub inverse_nu_decay: bool,
}

/// Anything indexable like a solution.
pub trait Sequence {
    fn get(&self, nu: u64) -> Option<C64>;
    fn span(&self) -> (u64, u64);
}

impl Sequence for SolutionTrajectory {
    fn get(&self, nu: u64) -> Option<C64> {
        self.value(nu)
    }

    fn span(&self) -> (u64, u64) {
        (self.start, self.end())
    }
}

/// Plain values `y(start), y(start+1), …`.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub start: u64,
    pub values: Vec<C64>,
}

impl Sequence for Samples {
    fn get(&self, nu: u64) -> Option<C64> {
        nu.checked_sub(self.start).and_then(|i| self.values.get(i as usize)).copied()
    }

    fn span(&self) -> (u64, u64) {
        (self.start, self.start + self.values.len() as u64)
    }
}

#[derive(Clone, Debug)]
pub struct DifferenceOperator {
    coeffs: Vec<CoefficientSequence>,
    start_offset: u64,
    flags: ClassFlags,
}

fn weakest(classes: impl IntoIterator<Item = DecayClass>) -> DecayClass {
    let mut out = DecayClass::Exact;
    for c in classes {
        out = match (out, c) {
            (DecayClass::VanishingOnly, _) | (_, DecayClass::VanishingOnly) => DecayClass::VanishingOnly,
            (DecayClass::InverseNu, _) | (_, DecayClass::InverseNu) => DecayClass::InverseNu,
            _ => DecayClass::Exact,
        };
    }
    out
}

impl DifferenceOperator {
    /// Operator with coefficients `a_0, …, a_d` posed for `ν ≥ m`.
    pub fn new(coeffs: Vec<CoefficientSequence>, start_offset: u64) -> Result<Self> {
        let Some(top) = coeffs.last() else {
            return Err(Error::Class("an operator needs at least one coefficient".into()));
        };
        let zero = C64::new(0.0, 0.0);
        let lo = start_offset.saturating_sub(1);
        if coeffs.len() > 1 && (lo..lo + CLASS_SAMPLE).all(|nu| top.at(nu) == zero) && top.limit() == Some(zero) {
            return Err(Error::Class("top coefficient vanishes identically".into()));
        }
        let mut op = Self { coeffs, start_offset, flags: ClassFlags::default() };
        op.flags = op.compute_flags();
        Ok(op)
    }

    fn compute_flags(&self) -> ClassFlags {
        let one = C64::new(1.0, 0.0);
        let lo = self.start_offset.saturating_sub(1);
        let top = self.coeffs.last().unwrap();
        let monic = top.is_constant(one)
            || (top.limit() == Some(one) && (lo..lo + CLASS_SAMPLE).all(|nu| top.at(nu) == one));
        let bottom = &self.coeffs[0];
        let invertible_bottom = (lo..lo + CLASS_SAMPLE).all(|nu| bottom.at(nu).norm() > 0.0);
        let convergent = self.coeffs.iter().all(|c| c.limit().is_some());
        let inverse_nu_decay = convergent && weakest(self.coeffs.iter().map(|c| c.decay_class())) != DecayClass::VanishingOnly;
        ClassFlags { monic, invertible_bottom, convergent, inverse_nu_decay }
    }

    /// Constant coefficients `a_0, …, a_d` (ascending).
    pub fn constant(coeffs: &[C64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| CoefficientSequence::constant(c)).collect(), 0)
    }

    /// `∇ − λ`.
    pub fn shift_minus(lambda: C64) -> Self {
        Self::constant(&[-lambda, C64::new(1.0, 0.0)]).expect("monic")
    }

    /// `μ_a`.
    pub fn multiplication(a: CoefficientSequence) -> Result<Self> {
        Self::new(vec![a], 0)
    }

    pub fn from_equation(eq: &PoincareEquation) -> Self {
        Self::new(eq.coefficients().to_vec(), eq.start_offset()).expect("equations are monic")
    }

    /// The equation `α y = 0`; needs a monic, convergent operator.
    pub fn to_equation(&self) -> Result<PoincareEquation> {
        if !self.flags.monic || self.degree() == 0 {
            return Err(Error::Class("only monic operators of positive degree define equations".into()));
        }
        PoincareEquation::new(self.coeffs.clone(), self.start_offset)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn start_offset(&self) -> u64 {
        self.start_offset
    }

    pub fn flags(&self) -> ClassFlags {
        self.flags
    }

    pub fn coefficients(&self) -> &[CoefficientSequence] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, k: usize, nu: u64) -> C64 {
        self.coeffs[k].at(nu)
    }

    pub fn decay_class(&self) -> DecayClass {
        weakest(self.coeffs.iter().map(|c| c.decay_class()))
    }

    /// Limits `ã_0, …, ã_d` when every coefficient has one.
    pub fn limits(&self) -> Option<Vec<C64>> {
        self.coeffs.iter().map(|c| c.limit()).collect()
    }

    /// `(αy)(ν) = Σ a_k(ν) y(ν+k)`.
    pub fn apply(&self, y: &dyn Sequence, nu: u64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=self.degree() {
            let v = y.get(nu + k as u64).ok_or_else(|| {
                let (start, end) = y.span();
                Error::Range { from: nu, to: nu + self.degree() as u64 + 1, start, end }
            })?;
            acc += self.coeff(k, nu) * v;
        }
        Ok(acc)
    }

    /// Same coefficients, posed from `μ` on.
    pub fn restrict(&self, mu: u64) -> Result<Self> {
        if mu < self.start_offset {
            return Err(Error::Domain { index: mu, min: self.start_offset });
        }
        Ok(Self { coeffs: self.coeffs.clone(), start_offset: mu, flags: self.flags }.reflagged())
    }

    fn reflagged(mut self) -> Self {
        self.flags = self.compute_flags();
        self
    }

    /// Serializable description; closures are tabulated on `[0, table_len)`.
    pub fn to_spec(&self, table_len: u64) -> OperatorSpec {
        OperatorSpec {
            degree: self.degree(),
            coefficients: self.coeffs.iter().map(|c| CoefficientSpec::from_sequence(c, table_len)).collect(),
            start_offset: self.start_offset,
        }
    }
}

/// JSON form, the same coefficient format as equations.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorSpec {
    pub degree: usize,
    pub coefficients: Vec<CoefficientSpec>,
    #[serde(default)]
    pub start_offset: u64,
}

impl OperatorSpec {
    pub fn into_operator(self) -> Result<DifferenceOperator> {
        if self.coefficients.len() != self.degree + 1 {
            return Err(Error::Class(format!(
                "degree {} needs {} coefficients, got {}",
                self.degree,
                self.degree + 1,
                self.coefficients.len()
            )));
        }
        DifferenceOperator::new(self.coefficients.into_iter().map(CoefficientSpec::into_sequence).collect(), self.start_offset)
    }
}

/// Coefficients of `β ∘ γ`: `Σ_{r+s=k} b_r c~_s` applied to the limits.
fn compose_limits(b: &[C64], c: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); b.len() + c.len() - 1];
    for (r, &br) in b.iter().enumerate() {
        for (s, &cs) in c.iter().enumerate() {
            out[r + s] += br * cs;
        }
    }
    out
}

/// `β ∘ γ`, with `k`-th coefficient `Σ_{r+s=k} b_r(ν) c_s(ν+r)`.
pub fn compose(beta: &DifferenceOperator, gamma: &DifferenceOperator) -> DifferenceOperator {
    let p = beta.degree();
    let q = gamma.degree();
    let limits = match (beta.limits(), gamma.limits()) {
        (Some(b), Some(c)) => Some(compose_limits(&b, &c)),
        _ => None,
    };
    let decay = weakest([beta.decay_class(), gamma.decay_class()]);
    let b = Arc::new(beta.clone());
    let c = Arc::new(gamma.clone());
    let coeffs = (0..=p + q)
        .map(|k| {
            let (b, c) = (Arc::clone(&b), Arc::clone(&c));
            let rule = move |nu: u64| {
                let mut acc = C64::new(0.0, 0.0);
                for r in k.saturating_sub(q)..=k.min(p) {
                    acc += b.coeff(r, nu) * c.coeff(k - r, nu + r as u64);
                }
                acc
            };
            if beta.coeffs.iter().chain(&gamma.coeffs).all(|s| s.decay_class() == DecayClass::Exact) {
                CoefficientSequence::constant(rule(0))
            } else {
                CoefficientSequence::custom(rule, limits.as_ref().map(|l| l[k]), decay)
            }
        })
        .collect();
    let m = beta.start_offset.max(gamma.start_offset);
    DifferenceOperator { coeffs, start_offset: m, flags: ClassFlags::default() }.reflagged()
}

/// Constant-coefficient operator of the limits and `P(α, z) = Σ ã_k z^k`.
pub fn limit_operator_and_charpoly(alpha: &DifferenceOperator) -> Result<(DifferenceOperator, Vec<C64>)> {
    let limits = alpha.limits().ok_or_else(|| Error::Class("operator has a coefficient without limit".into()))?;
    let op = DifferenceOperator::constant(&limits)?.restrict(alpha.start_offset)?;
    Ok((op, limits))
}

/// Pointwise quotient coefficients `u_0(ν), …, u_q(ν)` of `α = η ∘ β` for monic `β`.
fn quotient_at(alpha: &DifferenceOperator, beta: &DifferenceOperator, nu: u64) -> Vec<C64> {
    let p = beta.degree();
    let q = alpha.degree() - p;
    let mut u = vec![C64::new(0.0, 0.0); q + 1];
    for s in (0..=q).rev() {
        let mut v = alpha.coeff(s + p, nu);
        for (s2, &us2) in u.iter().enumerate().take(s + p + 1).skip(s + 1) {
            v -= us2 * beta.coeff(s + p - s2, nu + s2 as u64);
        }
        u[s] = v;
    }
    u
}

fn quotient_limits(a: &[C64], b: &[C64]) -> Vec<C64> {
    let p = b.len() - 1;
    let q = a.len() - 1 - p;
    let mut u = vec![C64::new(0.0, 0.0); q + 1];
    for s in (0..=q).rev() {
        let mut v = a[s + p];
        for s2 in s + 1..=q.min(s + p) {
            v -= u[s2] * b[s + p - s2];
        }
        u[s] = v;
    }
    u
}

/// `η` with `η ∘ β = α`, checked on `[m, m + 1000)`.
pub fn divide_right(alpha: &DifferenceOperator, beta: &DifferenceOperator) -> Result<DifferenceOperator> {
    divide_right_on(alpha, beta, DEFAULT_DIVISION_RANGE)
}

/// Right division verified on the working range `[m, m + range)`.
pub fn divide_right_on(alpha: &DifferenceOperator, beta: &DifferenceOperator, range: u64) -> Result<DifferenceOperator> {
    if !beta.flags.monic {
        return Err(Error::Class("right divisor must be monic".into()));
    }
    if beta.degree() > alpha.degree() {
        return Err(Error::Class("divisor degree exceeds dividend degree".into()));
    }
    let p = beta.degree();
    let q = alpha.degree() - p;
    let m = alpha.start_offset.max(beta.start_offset);
    let mut worst: (f64, u64) = (0.0, m);
    for nu in m..m + range {
        let u = quotient_at(alpha, beta, nu);
        for k in 0..p {
            let mut mag = alpha.coeff(k, nu).norm();
            let mut acc = alpha.coeff(k, nu);
            for (s, &us) in u.iter().enumerate().take(k.min(q) + 1) {
                let t = us * beta.coeff(k - s, nu + s as u64);
                acc -= t;
                mag += t.norm();
            }
            let rel = acc.norm() / mag.max(1.0);
            if rel > worst.0 {
                worst = (rel, nu);
            }
        }
    }
    if worst.0 > DIVISION_TOL {
        return Err(Error::InexactDivision { max_residual: worst.0, index: worst.1 });
    }
    let limits = match (alpha.limits(), beta.limits()) {
        (Some(a), Some(b)) => Some(quotient_limits(&a, &b)),
        _ => None,
    };
    let decay = weakest([alpha.decay_class(), beta.decay_class()]);
    let exact = alpha.decay_class() == DecayClass::Exact && beta.decay_class() == DecayClass::Exact;
    let a = Arc::new(alpha.clone());
    let b = Arc::new(beta.clone());
    let coeffs = (0..=q)
        .map(|s| {
            if exact {
                return CoefficientSequence::constant(quotient_at(&a, &b, m)[s]);
            }
            let (a, b) = (Arc::clone(&a), Arc::clone(&b));
            CoefficientSequence::custom(move |nu| quotient_at(&a, &b, nu)[s], limits.as_ref().map(|l| l[s]), decay)
        })
        .collect();
    Ok(DifferenceOperator { coeffs, start_offset: m, flags: ClassFlags::default() }.reflagged())
}
