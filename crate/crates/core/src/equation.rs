//! Coefficient sequences, Poincaré-type equations and their solutions.
//!
//! An equation of order `n` is `Σ_{k=0}^{n} a_k(ν) y(ν+k) = 0` with `a_n ≡ 1`
//! and every `a_k(ν)` converging to a limit `ã_k`. Solutions are stored in a
//! log-magnitude/phase form so that trajectories of a few thousand steps never
//! overflow even when the characteristic moduli are far from one.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

pub type C64 = Complex<f64>;

/// Relative per-step tolerance for "satisfies the recurrence".
pub const RECURRENCE_TOL: f64 = 1e-9;

/// How fast a coefficient approaches its limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayClass {
    /// `a(ν) − ã = O(1/ν)`.
    #[serde(rename = "inverse_nu")]
    InverseNu,
    /// Only `a(ν) → ã` is known.
    #[serde(rename = "vanishing")]
    VanishingOnly,
    /// Constant sequence.
    #[serde(rename = "exact")]
    Exact,
}

/// Evaluation rule of a coefficient sequence.
#[derive(Clone)]
pub enum Rule {
    Constant(C64),
    /// `num(ν) / den(ν)`, coefficients in ascending powers of `ν`.
    Rational { num: Vec<C64>, den: Vec<C64> },
    /// `offset + scale / ln(ν + 2)`.
    InverseLog { offset: C64, scale: C64 },
    /// Explicit values for `ν ∈ [start, start + values.len())`, `tail` elsewhere.
    Tabulated { start: u64, values: Arc<Vec<C64>>, tail: Box<Rule> },
    Custom(Arc<dyn Fn(u64) -> C64 + Send + Sync>),
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Constant(c) => write!(f, "Constant({c})"),
            Rule::Rational { num, den } => write!(f, "Rational({num:?} / {den:?})"),
            Rule::InverseLog { offset, scale } => write!(f, "InverseLog({offset} + {scale}/ln(ν+2))"),
            Rule::Tabulated { start, values, tail } => {
                write!(f, "Tabulated(start={start}, len={}, tail={tail:?})", values.len())
            }
            Rule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

fn horner(coeffs: &[C64], x: f64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

impl Rule {
    pub fn eval(&self, nu: u64) -> C64 {
        match self {
            Rule::Constant(c) => *c,
            Rule::Rational { num, den } => {
                let x = nu as f64;
                horner(num, x) / horner(den, x)
            }
            Rule::InverseLog { offset, scale } => offset + scale / ((nu as f64) + 2.0).ln(),
            Rule::Tabulated { start, values, tail } => {
                if nu >= *start && ((nu - start) as usize) < values.len() {
                    values[(nu - start) as usize]
                } else {
                    tail.eval(nu)
                }
            }
            Rule::Custom(f) => f(nu),
        }
    }

    /// Limit implied by the closed form, when one exists.
    pub fn natural_limit(&self) -> Option<C64> {
        match self {
            Rule::Constant(c) => Some(*c),
            Rule::Rational { num, den } => {
                let dn = degree(num)?;
                let dd = degree(den)?;
                match dn.cmp(&dd) {
                    std::cmp::Ordering::Less => Some(C64::new(0.0, 0.0)),
                    std::cmp::Ordering::Equal => Some(num[dn] / den[dd]),
                    std::cmp::Ordering::Greater => None,
                }
            }
            Rule::InverseLog { offset, .. } => Some(*offset),
            Rule::Tabulated { tail, .. } => tail.natural_limit(),
            Rule::Custom(_) => None,
        }
    }
}

fn degree(p: &[C64]) -> Option<usize> {
    p.iter().rposition(|c| c.norm() != 0.0)
}

/// One coefficient `a_k(ν)` with its declared limit and decay class.
#[derive(Clone, Debug)]
pub struct CoefficientSequence {
    rule: Rule,
    limit: Option<C64>,
    decay_class: DecayClass,
    decay_constant: Option<f64>,
}

impl CoefficientSequence {
    pub fn new(rule: Rule, limit: Option<C64>, decay_class: DecayClass, decay_constant: Option<f64>) -> Self {
        let limit = limit.or_else(|| rule.natural_limit());
        Self { rule, limit, decay_class, decay_constant }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(Rule::Constant(c), Some(c), DecayClass::Exact, Some(0.0))
    }

    /// `num(ν)/den(ν)`; the limit is read off the leading terms.
    pub fn rational(num: Vec<C64>, den: Vec<C64>, decay_class: DecayClass) -> Self {
        Self::new(Rule::Rational { num, den }, None, decay_class, None)
    }

    pub fn custom<F>(f: F, limit: Option<C64>, decay_class: DecayClass) -> Self
    where
        F: Fn(u64) -> C64 + Send + Sync + 'static,
    {
        Self::new(Rule::Custom(Arc::new(f)), limit, decay_class, None)
    }

    pub fn with_decay_constant(mut self, c: f64) -> Self {
        self.decay_constant = Some(c);
        self
    }

    #[inline]
    pub fn at(&self, nu: u64) -> C64 {
        self.rule.eval(nu)
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn limit(&self) -> Option<C64> {
        self.limit
    }

    pub fn decay_class(&self) -> DecayClass {
        self.decay_class
    }

    pub fn decay_constant(&self) -> Option<f64> {
        self.decay_constant
    }

    /// Sequence identically equal to `c` at every index.
    pub fn is_constant(&self, c: C64) -> bool {
        match &self.rule {
            Rule::Constant(v) => *v == c,
            _ => false,
        }
    }

    /// Spot-checks the declared decay class on `[from, to)`.
    pub fn check(&self, from: u64, to: u64) -> std::result::Result<(), String> {
        let Some(limit) = self.limit else {
            return Err("coefficient has no limit".into());
        };
        match self.decay_class {
            DecayClass::Exact => {
                for nu in from..to {
                    if self.at(nu) != limit {
                        return Err(format!("exact coefficient differs from its limit at {nu}"));
                    }
                }
            }
            DecayClass::InverseNu => {
                if let Some(cst) = self.decay_constant {
                    for nu in from..to {
                        let gap = (self.at(nu) - limit).norm();
                        let bound = cst / (nu as f64 + 1.0);
                        if gap > bound * (1.0 + 1e-12) + 1e-15 {
                            return Err(format!("|a(ν) − ã| = {gap:.3e} exceeds {bound:.3e} at ν = {nu}"));
                        }
                    }
                }
            }
            DecayClass::VanishingOnly => {}
        }
        Ok(())
    }

    /// Sampled `max (ν+1)|a(ν) − ã|` over `ν < horizon`.
    pub fn estimate_decay_constant(&self, horizon: u64) -> f64 {
        let Some(limit) = self.limit else { return f64::INFINITY };
        (0..horizon).map(|nu| (self.at(nu) - limit).norm() * (nu as f64 + 1.0)).fold(0.0, f64::max)
    }
}

/// `Σ_{k=0}^{n} a_k(ν) y(ν+k) = 0` with `a_n ≡ 1`, posed for `ν ≥ m`.
#[derive(Clone, Debug)]
pub struct PoincareEquation {
    coefficients: Vec<CoefficientSequence>,
    start_offset: u64,
}

/// `(y(ν), …, y(ν+n−1))`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub base_index: u64,
    pub window: CVector,
}

impl StateVector {
    pub fn new(base_index: u64, window: &[C64]) -> Self {
        Self { base_index, window: DVector::from_column_slice(window) }
    }
}

impl PoincareEquation {
    pub fn new(coefficients: Vec<CoefficientSequence>, start_offset: u64) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::InvalidEquation("order must be at least one".into()));
        }
        let top = coefficients.last().unwrap();
        let one = C64::new(1.0, 0.0);
        let monic = top.limit() == Some(one) && (0..64).all(|nu| top.at(start_offset + nu) == one);
        if !monic {
            return Err(Error::InvalidEquation("top coefficient must be the constant 1".into()));
        }
        for (k, c) in coefficients.iter().enumerate() {
            if c.limit().is_none() {
                return Err(Error::InvalidEquation(format!("coefficient {k} has no limit")));
            }
        }
        Ok(Self { coefficients, start_offset })
    }

    /// Constant-coefficient equation from `a_0, …, a_{n−1}`.
    pub fn constant(lower: &[C64]) -> Self {
        let mut coeffs: Vec<_> = lower.iter().map(|&c| CoefficientSequence::constant(c)).collect();
        coeffs.push(CoefficientSequence::constant(C64::new(1.0, 0.0)));
        Self { coefficients: coeffs, start_offset: 0 }
    }

    /// Equation with the given monic characteristic roots, constant coefficients.
    pub fn from_roots(roots: &[C64]) -> Self {
        let poly = crate::spectral::poly_from_roots(roots);
        Self::constant(&poly[..poly.len() - 1])
    }

    pub fn with_start_offset(mut self, m: u64) -> Self {
        self.start_offset = m;
        self
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn start_offset(&self) -> u64 {
        self.start_offset
    }

    pub fn coefficients(&self) -> &[CoefficientSequence] {
        &self.coefficients
    }

    #[inline]
    pub fn coeff(&self, k: usize, nu: u64) -> C64 {
        self.coefficients[k].at(nu)
    }

    pub fn limits(&self) -> Vec<C64> {
        self.coefficients.iter().map(|c| c.limit().expect("validated at construction")).collect()
    }

    /// Weakest decay class over all coefficients.
    pub fn decay_class(&self) -> DecayClass {
        let classes: Vec<_> = self.coefficients.iter().map(|c| c.decay_class()).collect();
        if classes.contains(&DecayClass::VanishingOnly) {
            DecayClass::VanishingOnly
        } else if classes.contains(&DecayClass::InverseNu) {
            DecayClass::InverseNu
        } else {
            DecayClass::Exact
        }
    }

    fn check_index(&self, nu: u64) -> Result<()> {
        if nu + 1 < self.start_offset {
            return Err(Error::Domain { index: nu, min: self.start_offset.saturating_sub(1) });
        }
        Ok(())
    }

    fn companion_from(row: impl Iterator<Item = C64>, n: usize) -> CMatrix {
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            a[(i, i + 1)] = C64::new(1.0, 0.0);
        }
        for (k, v) in row.enumerate().take(n) {
            a[(n - 1, k)] = -v;
        }
        a
    }

    /// `A(ν)`, advancing `Y(ν) ↦ Y(ν+1)`.
    pub fn companion_matrix(&self, nu: u64) -> Result<CMatrix> {
        self.check_index(nu)?;
        Ok(self.companion_unchecked(nu))
    }

    pub(crate) fn companion_unchecked(&self, nu: u64) -> CMatrix {
        let n = self.order();
        Self::companion_from((0..n).map(|k| self.coeff(k, nu)), n)
    }

    /// Companion matrix of the limit coefficients.
    pub fn limit_companion(&self) -> CMatrix {
        let n = self.order();
        Self::companion_from(self.limits().into_iter(), n)
    }

    pub fn step_forward(&self, state: &StateVector) -> Result<StateVector> {
        let n = self.order();
        let nu = state.base_index;
        self.check_index(nu)?;
        let next = -(0..n).map(|k| self.coeff(k, nu) * state.window[k]).sum::<C64>();
        let mut window = CVector::zeros(n);
        for i in 0..n - 1 {
            window[i] = state.window[i + 1];
        }
        window[n - 1] = next;
        Ok(StateVector { base_index: nu + 1, window })
    }

    pub fn step_backward(&self, state: &StateVector) -> Result<StateVector> {
        let n = self.order();
        let nu = state.base_index;
        if nu == 0 {
            return Err(Error::Domain { index: 0, min: 1 });
        }
        let prev = nu - 1;
        self.check_index(prev)?;
        let a0 = self.coeff(0, prev);
        if a0.norm() == 0.0 {
            return Err(Error::NonInvertibleStep { index: prev });
        }
        // y(ν−1+k) for k = 1..n is window[k−1]; y(ν−1+n) is the new tail, known from the window
        let mut s = C64::new(0.0, 0.0);
        for k in 1..n {
            s += self.coeff(k, prev) * state.window[k - 1];
        }
        s += state.window[n - 1];
        let y = -s / a0;
        let mut window = CVector::zeros(n);
        window[0] = y;
        for i in 1..n {
            window[i] = state.window[i - 1];
        }
        Ok(StateVector { base_index: prev, window })
    }

    /// Solution values `y(start), …, y(start + len − 1)` from an initial window.
    pub fn solve(&self, start: u64, window: &[C64], len: usize) -> Result<SolutionTrajectory> {
        let n = self.order();
        if window.len() != n {
            return Err(Error::InvalidEquation(format!("window has length {}, order is {n}", window.len())));
        }
        self.check_index(start)?;
        let mut traj = ScaledWindow::new(window);
        let mut values: Vec<LogComplex> = window.iter().map(|&z| LogComplex::from(z)).collect();
        let mut nu = start;
        while values.len() < len {
            let next = -(0..n).map(|k| self.coeff(k, nu) * traj.mant[k]).sum::<C64>();
            let scale = traj.log_scale;
            traj.push(next);
            values.push(LogComplex::from(next).scaled(scale));
            nu += 1;
        }
        values.truncate(len.max(n));
        Ok(SolutionTrajectory { start, order: n, values })
    }

    /// Largest relative residual `|Σ a_k y(ν+k)| / Σ |a_k y(ν+k)|` along a trajectory.
    pub fn recurrence_residual(&self, traj: &SolutionTrajectory) -> f64 {
        let n = self.order();
        let mut worst: f64 = 0.0;
        for i in 0..traj.values.len().saturating_sub(n) {
            let nu = traj.start + i as u64;
            let w = &traj.values[i..=i + n];
            let scale = w.iter().map(|v| v.ln_abs).fold(f64::NEG_INFINITY, f64::max);
            if scale == f64::NEG_INFINITY {
                continue;
            }
            let mut sum = C64::new(0.0, 0.0);
            let mut mag = 0.0;
            for (k, v) in w.iter().enumerate() {
                let t = self.coeff(k, nu) * v.rescaled(scale);
                sum += t;
                mag += t.norm();
            }
            if mag > 0.0 {
                worst = worst.max(sum.norm() / mag);
            }
        }
        worst
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: EquationSpec = serde_json::from_str(text)?;
        spec.into_equation()
    }

    /// Serializable description; non-closed-form rules are tabulated on `[0, table_len)`.
    pub fn to_spec(&self, table_len: u64) -> EquationSpec {
        EquationSpec {
            order: self.order(),
            coefficients: self.coefficients.iter().map(|c| CoefficientSpec::from_sequence(c, table_len)).collect(),
            start_offset: self.start_offset,
        }
    }
}

/// Window of mantissas sharing one log-scale; keeps long runs finite.
pub(crate) struct ScaledWindow {
    pub mant: Vec<C64>,
    pub log_scale: f64,
}

impl ScaledWindow {
    pub fn new(window: &[C64]) -> Self {
        let mut w = Self { mant: window.to_vec(), log_scale: 0.0 };
        w.renormalize();
        w
    }

    pub fn push(&mut self, z: C64) {
        self.mant.remove(0);
        self.mant.push(z);
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let m = self.mant.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if m > 0.0 && m.is_finite() && !(1e-50..=1e50).contains(&m) {
            let inv = 1.0 / m;
            for z in &mut self.mant {
                *z *= inv;
            }
            self.log_scale += m.ln();
        }
    }
}

/// A complex number as `exp(ln_abs) · phase` with `|phase| = 1` (or `0` for zero).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub phase: C64,
}

impl From<C64> for LogComplex {
    fn from(z: C64) -> Self {
        let r = z.norm();
        if r == 0.0 {
            Self { ln_abs: f64::NEG_INFINITY, phase: C64::new(0.0, 0.0) }
        } else {
            Self { ln_abs: r.ln(), phase: z / r }
        }
    }
}

impl LogComplex {
    pub fn scaled(self, log_factor: f64) -> Self {
        Self { ln_abs: self.ln_abs + log_factor, phase: self.phase }
    }

    /// Value as a plain complex number; may overflow to infinity.
    pub fn value(&self) -> C64 {
        if self.ln_abs == f64::NEG_INFINITY {
            C64::new(0.0, 0.0)
        } else {
            self.phase * self.ln_abs.exp()
        }
    }

    /// `value · exp(−log_scale)`.
    pub fn rescaled(&self, log_scale: f64) -> C64 {
        if self.ln_abs == f64::NEG_INFINITY {
            C64::new(0.0, 0.0)
        } else {
            self.phase * (self.ln_abs - log_scale).exp()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }
}

/// Finite stretch `y(start), y(start+1), …` of a solution.
#[derive(Clone, Debug)]
pub struct SolutionTrajectory {
    pub start: u64,
    pub order: usize,
    pub values: Vec<LogComplex>,
}

impl SolutionTrajectory {
    pub fn from_values(start: u64, order: usize, values: &[C64]) -> Self {
        Self { start, order, values: values.iter().map(|&z| LogComplex::from(z)).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> u64 {
        self.start + self.values.len() as u64
    }

    pub fn get(&self, nu: u64) -> Option<LogComplex> {
        if nu < self.start {
            return None;
        }
        self.values.get((nu - self.start) as usize).copied()
    }

    pub fn value(&self, nu: u64) -> Option<C64> {
        self.get(nu).map(|v| v.value())
    }

    fn check_window(&self, nu: u64, n: usize) -> Result<()> {
        if nu < self.start || nu + n as u64 > self.end() {
            return Err(Error::Range { from: nu, to: nu + n as u64, start: self.start, end: self.end() });
        }
        Ok(())
    }

    /// `ω_{n,y}(ν) = max(|y(ν)|, …, |y(ν+n−1)|)`.
    pub fn window_norm(&self, nu: u64, n: usize) -> Result<f64> {
        Ok(self.ln_window_norm(nu, n)?.exp())
    }

    /// `ln ω_{n,y}(ν)`; `−∞` on an all-zero window.
    pub fn ln_window_norm(&self, nu: u64, n: usize) -> Result<f64> {
        self.check_window(nu, n)?;
        let i = (nu - self.start) as usize;
        Ok(self.values[i..i + n].iter().map(|v| v.ln_abs).fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn state(&self, nu: u64) -> Result<StateVector> {
        self.check_window(nu, self.order)?;
        let i = (nu - self.start) as usize;
        let window: Vec<C64> = self.values[i..i + self.order].iter().map(|v| v.value()).collect();
        Ok(StateVector::new(nu, &window))
    }

    /// Multiplies every value by `c`.
    pub fn scale(&self, c: C64) -> Self {
        let f = LogComplex::from(c);
        let values = self
            .values
            .iter()
            .map(|v| {
                if v.is_zero() || f.is_zero() {
                    LogComplex::from(C64::new(0.0, 0.0))
                } else {
                    LogComplex { ln_abs: v.ln_abs + f.ln_abs, phase: v.phase * f.phase }
                }
            })
            .collect();
        Self { start: self.start, order: self.order, values }
    }
}

pub fn window_norm(traj: &SolutionTrajectory, nu: u64, n: usize) -> Result<f64> {
    traj.window_norm(nu, n)
}

// ---- JSON schema ----

fn cx(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

fn uncx(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RuleSpec {
    Constant([f64; 2]),
    Rational { num: Vec<[f64; 2]>, den: Vec<[f64; 2]> },
    InverseLog { offset: [f64; 2], scale: [f64; 2] },
    Table { start: u64, values: Vec<[f64; 2]>, tail: Box<RuleSpec> },
}

impl RuleSpec {
    fn into_rule(self) -> Rule {
        match self {
            RuleSpec::Constant(c) => Rule::Constant(cx(c)),
            RuleSpec::Rational { num, den } => {
                Rule::Rational { num: num.into_iter().map(cx).collect(), den: den.into_iter().map(cx).collect() }
            }
            RuleSpec::InverseLog { offset, scale } => Rule::InverseLog { offset: cx(offset), scale: cx(scale) },
            RuleSpec::Table { start, values, tail } => Rule::Tabulated {
                start,
                values: Arc::new(values.into_iter().map(cx).collect()),
                tail: Box::new(tail.into_rule()),
            },
        }
    }

    fn from_rule(rule: &Rule, limit: Option<C64>, table_len: u64) -> Self {
        match rule {
            Rule::Constant(c) => RuleSpec::Constant(uncx(*c)),
            Rule::Rational { num, den } => RuleSpec::Rational {
                num: num.iter().copied().map(uncx).collect(),
                den: den.iter().copied().map(uncx).collect(),
            },
            Rule::InverseLog { offset, scale } => RuleSpec::InverseLog { offset: uncx(*offset), scale: uncx(*scale) },
            Rule::Tabulated { start, values, tail } => RuleSpec::Table {
                start: *start,
                values: values.iter().copied().map(uncx).collect(),
                tail: Box::new(RuleSpec::from_rule(tail, limit, table_len)),
            },
            Rule::Custom(_) => RuleSpec::Table {
                start: 0,
                values: (0..table_len).map(|nu| uncx(rule.eval(nu))).collect(),
                tail: Box::new(RuleSpec::Constant(uncx(limit.unwrap_or(C64::new(f64::NAN, f64::NAN))))),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoefficientSpec {
    #[serde(flatten)]
    pub rule: RuleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<[f64; 2]>,
    #[serde(default = "default_decay")]
    pub decay: DecayClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_constant: Option<f64>,
}

fn default_decay() -> DecayClass {
    DecayClass::InverseNu
}

impl CoefficientSpec {
    pub fn into_sequence(self) -> CoefficientSequence {
        CoefficientSequence::new(self.rule.into_rule(), self.limit.map(cx), self.decay, self.decay_constant)
    }

    pub fn from_sequence(c: &CoefficientSequence, table_len: u64) -> Self {
        Self {
            rule: RuleSpec::from_rule(c.rule(), c.limit(), table_len),
            limit: c.limit().map(uncx),
            decay: c.decay_class(),
            decay_constant: c.decay_constant(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EquationSpec {
    pub order: usize,
    pub coefficients: Vec<CoefficientSpec>,
    #[serde(default)]
    pub start_offset: u64,
}

impl EquationSpec {
    pub fn into_equation(self) -> Result<PoincareEquation> {
        if self.coefficients.len() != self.order + 1 {
            return Err(Error::InvalidEquation(format!(
                "order {} needs {} coefficients, got {}",
                self.order,
                self.order + 1,
                self.coefficients.len()
            )));
        }
        let coeffs = self.coefficients.into_iter().map(CoefficientSpec::into_sequence).collect();
        PoincareEquation::new(coeffs, self.start_offset)
    }
}
