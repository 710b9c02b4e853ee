//! Growth envelopes and transfer products.
//!
//! Transfer products `A(b−1)···A(a)` are accumulated along a dyadic schedule
//! `a = a_0 < a_1 < … < a_d = b` with `a_i ≤ 2a_{i−1}`. Each block is multiplied
//! in plain doubles and then folded into a running product that is kept at unit
//! `h~`-norm, its logarithmic scale carried separately. For every block the
//! ε-adapted norm of the limit matrix with `ε_i = a_{i−1}^{−1/k}` is reported
//! next to the raw norm.

use serde::{Deserialize, Serialize};

use crate::adapted::{adapted_norm_from_structure, jordan_structure, JordanStructure};
use crate::equation::{DecayClass, PoincareEquation};
use crate::error::{Error, Result};
use crate::linalg::{h_op, CMatrix};
use crate::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};

/// Horizon over which an undeclared decay constant is sampled.
pub const DECAY_SAMPLE_HORIZON: u64 = 10_000;

/// Closed-form upper bound for `Σ_{κ=a}^{b} ln(1 + C/κ)`.
pub fn log_sum_bound(a: u64, b: u64, c: f64) -> Result<f64> {
    if a == 0 || b < a || !(c > 0.0) {
        return Err(Error::Config(format!("log_sum_bound needs 1 ≤ a ≤ b and C > 0, got a={a}, b={b}, C={c}")));
    }
    let (a, b) = (a as f64, b as f64);
    let la = (c / a).ln_1p();
    Ok(la + b * (c / b).ln_1p() - a * la + c * ((b + c) / (a + c)).ln())
}

/// `Σ_{κ=a}^{b} ln(1 + C/κ)` summed term by term.
pub fn log_sum_direct(a: u64, b: u64, c: f64) -> f64 {
    (a..=b).map(|k| (c / k as f64).ln_1p()).sum()
}

/// Points `a_0 < … < a_d` with `a_i ≤ 2a_{i−1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicSchedule {
    pub points: Vec<u64>,
}

impl DyadicSchedule {
    pub fn start(&self) -> u64 {
        self.points[0]
    }

    pub fn end(&self) -> u64 {
        *self.points.last().unwrap()
    }

    /// Number of blocks `d`.
    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    pub fn blocks(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Greedy doubling from `start`, capped at `end`.
pub fn dyadic_schedule(start: u64, end: u64) -> Result<DyadicSchedule> {
    if start == 0 || end < start {
        return Err(Error::Config(format!("dyadic schedule needs 1 ≤ start ≤ end, got ({start}, {end})")));
    }
    let mut points = vec![start];
    let mut cur = start;
    while cur < end {
        cur = (2 * cur).min(end);
        points.push(cur);
    }
    Ok(DyadicSchedule { points })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `A(b−1)···A(a)`, mapping `Y(a)` to `Y(b)`.
    Forward,
    /// `A(a)⁻¹···A(b−1)⁻¹`, mapping `Y(b)` back to `Y(a)`.
    Inverse,
}

/// One dyadic block of a transfer product.
#[derive(Clone, Debug, Serialize)]
pub struct SegmentReport {
    pub from: u64,
    pub to: u64,
    pub epsilon: f64,
    /// `ln h~` of the block product.
    pub log_norm: f64,
    /// `ln p~_{Ã,ε}` of the block product.
    pub log_adapted: Option<f64>,
    /// `Σ ln p~_{Ã,ε}(A(κ)^{±1})` over the block; dominates `log_adapted`.
    pub log_adapted_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogTransferProduct {
    pub from: u64,
    pub to: u64,
    pub direction: Direction,
    /// `ln h~` of the whole product.
    pub log_norm: f64,
    pub scaling_events: usize,
    /// Start index asked for, when it was raised to the invertibility threshold.
    pub requested_from: Option<u64>,
    pub segments: Vec<SegmentReport>,
    /// Product divided by `exp(log_norm)`.
    #[serde(skip)]
    pub normalized: CMatrix,
}

const RENORMALIZE_ABOVE: f64 = 1e100;

impl LogTransferProduct {
    /// Product over `[from, later.to)`; `later` must start where `self` ends.
    pub fn then(&self, later: &LogTransferProduct) -> Result<LogTransferProduct> {
        if self.to != later.from || self.direction != later.direction {
            return Err(Error::Config(format!(
                "cannot join products over [{}, {}) and [{}, {})",
                self.from, self.to, later.from, later.to
            )));
        }
        let joined = match self.direction {
            Direction::Forward => &later.normalized * &self.normalized,
            Direction::Inverse => &self.normalized * &later.normalized,
        };
        let h = h_op(&joined);
        let mut segments = self.segments.clone();
        segments.extend(later.segments.iter().cloned());
        Ok(LogTransferProduct {
            from: self.from,
            to: later.to,
            direction: self.direction,
            log_norm: self.log_norm + later.log_norm + h.ln(),
            scaling_events: self.scaling_events + later.scaling_events + 1,
            requested_from: self.requested_from,
            segments,
            normalized: joined / crate::linalg::c(h),
        })
    }

    pub fn per_step(&self) -> f64 {
        self.log_norm / (self.to - self.from).max(1) as f64
    }
}

/// `A(ν)⁻¹`: first row `−(a_1, …, a_n)/a_0`, then the shifted identity.
pub fn inverse_companion(eq: &PoincareEquation, nu: u64) -> Result<CMatrix> {
    let n = eq.order();
    let a0 = eq.coeff(0, nu);
    if a0.norm() == 0.0 {
        return Err(Error::NonInvertibleStep { index: nu });
    }
    let mut m = CMatrix::zeros(n, n);
    for k in 1..=n {
        m[(0, k - 1)] = -eq.coeff(k, nu) / a0;
    }
    for i in 1..n {
        m[(i, i - 1)] = crate::linalg::c(1.0);
    }
    Ok(m)
}

/// `C₁` with `|a_k(ν) − ã_k| ≤ C₁/(ν+1)`: declared when every coefficient has
/// one, sampled otherwise. `None` unless every coefficient decays like `1/ν`.
pub fn decay_constant(eq: &PoincareEquation) -> Option<f64> {
    if eq.decay_class() == DecayClass::VanishingOnly {
        return None;
    }
    let mut total = 0.0;
    for c in eq.coefficients() {
        total += match (c.decay_class(), c.decay_constant()) {
            (DecayClass::Exact, _) => 0.0,
            (_, Some(v)) => v,
            _ => c.estimate_decay_constant(DECAY_SAMPLE_HORIZON),
        };
    }
    Some(total)
}

/// Smallest start index from which the inverse products are controlled:
/// `max((2/ρ_s)^k, 2 C₁ h~(Ã⁻¹))`, rounded up.
pub fn inverse_threshold(eq: &PoincareEquation, profile: &CharacteristicProfile) -> Result<u64> {
    if profile.k_star() > 0 || profile.s() == 0 {
        return Err(Error::Class("inverse transfer products need a characteristic polynomial without zero roots".into()));
    }
    let rho_s = profile.rho(profile.s());
    let k = profile.k_global.max(1) as i32;
    let lim = eq.limit_companion();
    let inv = lim.try_inverse().ok_or(Error::Singular)?;
    let c1 = decay_constant(eq).unwrap_or(0.0);
    let t = (2.0 / rho_s).powi(k).max(2.0 * c1 * h_op(&inv));
    Ok(t.floor() as u64 + 1)
}

fn step_matrix(eq: &PoincareEquation, nu: u64, direction: Direction) -> Result<CMatrix> {
    match direction {
        Direction::Forward => eq.companion_matrix(nu),
        Direction::Inverse => inverse_companion(eq, nu),
    }
}

/// Log-scale transfer product over `[a, b)`.
pub fn transfer_log_norm(eq: &PoincareEquation, a: u64, b: u64, direction: Direction) -> Result<LogTransferProduct> {
    let profile = CharacteristicProfile::from_equation(eq, DEFAULT_CLUSTER_TOL)?;
    transfer_log_norm_with(eq, &profile, a, b, direction)
}

pub fn transfer_log_norm_with(
    eq: &PoincareEquation,
    profile: &CharacteristicProfile,
    a: u64,
    b: u64,
    direction: Direction,
) -> Result<LogTransferProduct> {
    let mut from = a.max(1);
    let mut requested_from = None;
    if direction == Direction::Inverse {
        let t = inverse_threshold(eq, profile)?;
        if from < t && eq.decay_class() != DecayClass::VanishingOnly {
            requested_from = Some(from);
            from = t;
        }
    }
    if b < from {
        return Err(Error::Range { from, to: b, start: from, end: b });
    }
    let n = eq.order();
    let k = profile.k_global.max(1) as f64;
    let lim = eq.limit_companion();
    let structure: Option<JordanStructure> = jordan_structure(&lim).ok();

    let mut running = CMatrix::identity(n, n);
    let mut log_norm = 0.0;
    let mut scaling_events = 0;
    let mut segments = Vec::new();
    if b > from {
        let schedule = dyadic_schedule(from, b)?;
        for (lo, hi) in schedule.blocks() {
            let epsilon = (lo as f64).powf(-1.0 / k);
            let norm = structure.as_ref().and_then(|s| adapted_norm_from_structure(&lim, s.clone(), epsilon).ok());
            let mut block = CMatrix::identity(n, n);
            let mut block_log = 0.0;
            let mut bound = norm.as_ref().map(|_| 0.0);
            for nu in lo..hi {
                let m = step_matrix(eq, nu, direction)?;
                if let (Some(acc), Some(p)) = (bound.as_mut(), norm.as_ref()) {
                    *acc += p.induced(&m).ln();
                }
                block = match direction {
                    Direction::Forward => &m * &block,
                    Direction::Inverse => &block * &m,
                };
                let h = h_op(&block);
                if h > RENORMALIZE_ABOVE || (h > 0.0 && h < 1.0 / RENORMALIZE_ABOVE) {
                    block /= crate::linalg::c(h);
                    block_log += h.ln();
                    scaling_events += 1;
                }
            }
            let h = h_op(&block);
            let seg_log = block_log + h.ln();
            let log_adapted = norm.as_ref().map(|p| block_log + p.induced(&block).ln());
            segments.push(SegmentReport {
                from: lo,
                to: hi,
                epsilon,
                log_norm: seg_log,
                log_adapted,
                log_adapted_bound: bound,
            });
            running = match direction {
                Direction::Forward => &block * &running,
                Direction::Inverse => &running * &block,
            };
            let hr = h_op(&running);
            log_norm += block_log + hr.ln();
            running /= crate::linalg::c(hr);
            scaling_events += 1;
        }
    }
    Ok(LogTransferProduct {
        from,
        to: b,
        direction,
        log_norm,
        scaling_events,
        requested_from,
        segments,
        normalized: running,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnvelopeMode {
    /// `ρ^ν exp(±A(ν^{1−1/k} + ln ν))`.
    PolyLog,
    /// `(A/ν)^{ν/k}`.
    Factorial,
    /// `exp(±A)(ρ e^{ε})^ν`; `epsilon` carries its sign.
    EpsilonGeometric { epsilon: f64 },
}

/// Envelope family without its constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeShape {
    pub rho: f64,
    pub k: usize,
    pub mode: EnvelopeMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEnvelope {
    pub shape: EnvelopeShape,
    pub a_const: f64,
    pub side: Side,
}

fn poly_log_weight(nu: f64, k: usize) -> f64 {
    nu.powf(1.0 - 1.0 / k.max(1) as f64) + nu.ln()
}

impl GrowthEnvelope {
    pub fn ln_value(&self, nu: u64) -> f64 {
        let x = nu as f64;
        let s = match self.side {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        };
        let EnvelopeShape { rho, k, mode } = self.shape;
        match mode {
            EnvelopeMode::PolyLog => x * rho.ln() + s * self.a_const * poly_log_weight(x, k),
            EnvelopeMode::Factorial => x / k.max(1) as f64 * (self.a_const.ln() - x.ln()),
            EnvelopeMode::EpsilonGeometric { epsilon } => s * self.a_const + x * (rho.ln() + epsilon),
        }
    }
}

/// Value of the envelope at `ν ≥ 1`.
pub fn envelope_value(env: &GrowthEnvelope, nu: u64) -> f64 {
    env.ln_value(nu).exp()
}

/// Least constant for which the envelope bounds `series` on `side`.
///
/// `series` holds `(ν, ln value)` pairs with `ν ≥ 1`. The constant is clamped at
/// zero for the poly-log and ε-geometric families.
pub fn fit_envelope_constant(series: &[(u64, f64)], shape: &EnvelopeShape, side: Side) -> Result<f64> {
    let mut best: f64 = 0.0;
    for &(nu, ln_v) in series {
        if nu == 0 {
            return Err(Error::Config("envelopes are defined for ν ≥ 1".into()));
        }
        if ln_v == f64::NEG_INFINITY {
            if side == Side::Lower {
                return Err(Error::DegenerateSeries { index: nu });
            }
            continue;
        }
        let x = nu as f64;
        let need = match (shape.mode, side) {
            (EnvelopeMode::PolyLog, Side::Upper) => (ln_v - x * shape.rho.ln()) / poly_log_weight(x, shape.k),
            (EnvelopeMode::PolyLog, Side::Lower) => (x * shape.rho.ln() - ln_v) / poly_log_weight(x, shape.k),
            (EnvelopeMode::Factorial, Side::Upper) => (x.ln() + shape.k.max(1) as f64 * ln_v / x).exp(),
            (EnvelopeMode::Factorial, Side::Lower) => {
                return Err(Error::Config("factorial envelopes bound from above only".into()))
            }
            (EnvelopeMode::EpsilonGeometric { epsilon }, Side::Upper) => ln_v - x * (shape.rho.ln() + epsilon),
            (EnvelopeMode::EpsilonGeometric { epsilon }, Side::Lower) => x * (shape.rho.ln() + epsilon) - ln_v,
        };
        if need.is_nan() {
            return Err(Error::DegenerateSeries { index: nu });
        }
        best = best.max(need);
    }
    Ok(best)
}

pub fn fit_envelope(series: &[(u64, f64)], shape: EnvelopeShape, side: Side) -> Result<GrowthEnvelope> {
    Ok(GrowthEnvelope { shape, a_const: fit_envelope_constant(series, &shape, side)?, side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn fib() -> PoincareEquation {
        PoincareEquation::constant(&[c(-1.0), c(-1.0)])
    }

    #[test]
    fn log_sum_examples() {
        assert!(log_sum_direct(1, 1, 1.0) <= log_sum_bound(1, 1, 1.0).unwrap());
        assert!(log_sum_direct(5, 5, 2.0) <= log_sum_bound(5, 5, 2.0).unwrap());
        assert!(log_sum_direct(4, 7, 0.5) <= 1.5);
        assert!(log_sum_bound(0, 3, 1.0).is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(dyadic_schedule(1, 8).unwrap().points, vec![1, 2, 4, 8]);
        let one = dyadic_schedule(1, 1).unwrap();
        assert_eq!((one.points.clone(), one.depth()), (vec![1], 0));
        assert_eq!(dyadic_schedule(3, 10).unwrap().points, vec![3, 6, 10]);
    }

    #[test]
    fn fibonacci_forward_and_inverse() {
        let ln_phi = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        let f = transfer_log_norm(&fib(), 1, 64, Direction::Forward).unwrap();
        assert!((f.log_norm / 64.0 - ln_phi).abs() < 0.05);
        let i = transfer_log_norm(&fib(), 8, 64, Direction::Inverse).unwrap();
        assert_eq!(i.from, 8);
        assert!((i.log_norm / 56.0 - ln_phi).abs() < 0.1);
    }

    #[test]
    fn identity_recurrence_has_zero_log_norm() {
        let eq = PoincareEquation::constant(&[c(-1.0)]);
        let t = transfer_log_norm(&eq, 1, 500, Direction::Forward).unwrap();
        assert_eq!(t.log_norm, 0.0);
    }

    #[test]
    fn short_range_matches_direct_product() {
        let eq = PoincareEquation::constant(&[c(2.0), c(-3.0)]);
        let t = transfer_log_norm(&eq, 3, 30, Direction::Forward).unwrap();
        let mut p = CMatrix::identity(2, 2);
        for nu in 3..30 {
            p = eq.companion_matrix(nu).unwrap() * p;
        }
        assert!((t.log_norm.exp() / h_op(&p) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn adapted_segments_dominated_by_stepwise_bound() {
        let eq = PoincareEquation::constant(&[c(1.0), c(-2.0)]);
        let t = transfer_log_norm(&eq, 1, 256, Direction::Forward).unwrap();
        for s in &t.segments {
            assert!(s.log_adapted.unwrap() <= s.log_adapted_bound.unwrap() + 1e-9);
        }
    }

    #[test]
    fn inverse_of_singular_step_errors() {
        let eq = PoincareEquation::constant(&[c(0.0), c(-1.0)]);
        assert!(matches!(inverse_companion(&eq, 3), Err(Error::NonInvertibleStep { index: 3 })));
    }

    #[test]
    fn envelope_examples() {
        let poly = |rho, k, a| GrowthEnvelope {
            shape: EnvelopeShape { rho, k, mode: EnvelopeMode::PolyLog },
            a_const: a,
            side: Side::Upper,
        };
        assert_eq!(envelope_value(&poly(1.0, 1, 0.0), 10), 1.0);
        let v = envelope_value(&poly(2.0, 2, 1.0), 4);
        assert!((v - 64.0 * 1f64.exp().powi(2)).abs() < 1e-9);
        let fact = GrowthEnvelope {
            shape: EnvelopeShape { rho: 0.0, k: 1, mode: EnvelopeMode::Factorial },
            a_const: 1.0,
            side: Side::Upper,
        };
        assert!((envelope_value(&fact, 4) - 0.00390625).abs() < 1e-15);
    }

    #[test]
    fn fit_examples() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let series: Vec<_> = (1..200u64).map(|nu| (nu, nu as f64 * phi.ln())).collect();
        let shape = EnvelopeShape { rho: phi, k: 1, mode: EnvelopeMode::PolyLog };
        assert!(fit_envelope_constant(&series, &shape, Side::Upper).unwrap().abs() < 1e-12);

        let series: Vec<_> = (1..=100u64).map(|nu| (nu, (nu as f64).ln())).collect();
        let shape = EnvelopeShape { rho: 1.0, k: 2, mode: EnvelopeMode::PolyLog };
        let a = fit_envelope_constant(&series, &shape, Side::Upper).unwrap();
        let oracle = (1..=100).map(|n| (n as f64).ln() / ((n as f64).sqrt() + (n as f64).ln())).fold(0.0, f64::max);
        assert!((a - oracle).abs() < 1e-14);

        let mut lf = 0.0;
        let series: Vec<_> = (1..=20u64)
            .map(|nu| {
                lf += (nu as f64).ln();
                (nu, -lf)
            })
            .collect();
        let shape = EnvelopeShape { rho: 0.0, k: 1, mode: EnvelopeMode::Factorial };
        let a = fit_envelope_constant(&series, &shape, Side::Upper).unwrap();
        let env = GrowthEnvelope { shape, a_const: a, side: Side::Upper };
        for &(nu, v) in &series {
            assert!(env.ln_value(nu) >= v - 1e-12);
        }
        assert!(a > 1.0 && a < std::f64::consts::E);
    }

    #[test]
    fn lower_fit_rejects_zero() {
        let shape = EnvelopeShape { rho: 1.0, k: 1, mode: EnvelopeMode::PolyLog };
        let series = [(1, 0.0), (2, f64::NEG_INFINITY)];
        assert!(matches!(fit_envelope_constant(&series, &shape, Side::Lower), Err(Error::DegenerateSeries { index: 2 })));
    }
}
