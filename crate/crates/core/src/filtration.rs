//! The modulus filtration `V^∧_θ` of the solution space and the empirical
//! growth checks built on it.
//!
//! Solutions are identified with their initial windows `Y(m) ∈ ℂⁿ`. The level
//! `V^∧_θ` (solutions growing no faster than `ρ_θ^ν`) is the span of the least
//! expanded directions of the transfer product. They are found by orthogonal
//! iteration with the adjoint matrices run backwards from a far horizon: after
//! the sweep, the first columns of the frame at `m` carry the fastest growth
//! and the trailing `dim V^∧_θ` columns span `V^∧_θ`. The sweep never inverts a
//! step, so vanishing `a_0(ν)` is harmless.
//!
//! Slow solutions cannot be obtained by plain forward recursion, which drifts
//! into the dominant directions after a few dozen steps. They are generated
//! forwards with a projection onto the stored level at every index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::{fit_envelope_constant, EnvelopeMode, EnvelopeShape, GrowthEnvelope, Side};
use crate::equation::{LogComplex, PoincareEquation, SolutionTrajectory, C64};
use crate::error::{Error, Result};
use crate::linalg::{containment_angle, h_norm, min_principal_angle, orthonormalize, subspace_angle, CMatrix, CVector};
use crate::spectral::CharacteristicProfile;

pub const DEFAULT_HORIZON: u64 = 1000;
pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_ANGLE_TOL: f64 = 1e-6;
pub const TRANSVERSALITY_TOL: f64 = 1e-8;
/// Allowed growth of a fitted constant from half the horizon to the full one.
pub const STABILITY_RATIO: f64 = 1.1;
const MIN_MARGIN: u64 = 32;
const MAX_MARGIN: u64 = 10_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiltrationConfig {
    pub horizon: u64,
    pub seed: u64,
    pub samples: usize,
    pub tail_fraction: f64,
    pub angle_tol: f64,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tail_fraction: 0.5,
            angle_tol: DEFAULT_ANGLE_TOL,
        }
    }
}

impl FiltrationConfig {
    pub fn with_horizon(mut self, h: u64) -> Self {
        self.horizon = h;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn random_complex(rng: &mut impl Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    orthonormalize(&CMatrix::from_fn(n, n, |_, _| random_complex(rng)))
}

/// Orthonormal frames `W_ν` from the backward adjoint sweep.
#[derive(Clone, Debug)]
pub struct FlagSweep {
    start: u64,
    frames: Vec<CMatrix>,
}

impl FlagSweep {
    pub fn start(&self) -> u64 {
        self.start
    }

    /// Last index with a frame.
    pub fn end(&self) -> u64 {
        self.start + self.frames.len() as u64 - 1
    }

    pub fn frame(&self, nu: u64) -> &CMatrix {
        &self.frames[(nu - self.start) as usize]
    }

    /// Orthonormal basis of the `dim`-dimensional slow level at `ν`.
    pub fn slow_space(&self, nu: u64, dim: usize) -> CMatrix {
        let w = self.frame(nu);
        let n = w.ncols();
        w.columns(n - dim, dim).into_owned()
    }
}

/// `W_ν = Q(A(ν)^H W_{ν+1})` from a random unitary `W_end` down to `W_start`.
pub fn flag_sweep(eq: &PoincareEquation, start: u64, end: u64, seed: u64) -> Result<FlagSweep> {
    let n = eq.order();
    let mut rng = rng_for(seed, 1);
    let mut w = random_unitary(n, &mut rng);
    let mut frames = Vec::with_capacity((end - start + 1) as usize);
    frames.push(w.clone());
    for nu in (start..end).rev() {
        let a = eq.companion_matrix(nu)?;
        w = (a.adjoint() * &w).qr().q();
        frames.push(w.clone());
    }
    frames.reverse();
    Ok(FlagSweep { start, frames })
}

/// Extra sweep length so that the slowest level gap contracts to rounding.
pub fn sweep_margin(profile: &CharacteristicProfile) -> u64 {
    let s = profile.s();
    let mut gap = f64::INFINITY;
    for theta in 1..s {
        gap = gap.min((profile.rho(theta) / profile.rho(theta + 1)).ln());
    }
    if gap.is_infinite() {
        return MIN_MARGIN;
    }
    ((37.0 / gap).ceil() as u64).clamp(MIN_MARGIN, MAX_MARGIN)
}

/// Forward solution from `x0 ∈ V^∧` at `m`, projected onto the `dim`-dimensional
/// slow level after every step.
pub fn slow_trajectory(eq: &PoincareEquation, sweep: &FlagSweep, dim: usize, x0: &CVector, len: usize) -> Result<SolutionTrajectory> {
    let n = eq.order();
    let m = sweep.start();
    if dim == n {
        let w: Vec<C64> = x0.iter().copied().collect();
        return eq.solve(m, &w, len);
    }
    if m + len.saturating_sub(n) as u64 > sweep.end() {
        return Err(Error::Range { from: m, to: m + len as u64, start: m, end: sweep.end() });
    }
    let mut x = x0.clone();
    let mut log_scale = 0.0;
    let mut values: Vec<LogComplex> = x.iter().map(|&z| LogComplex::from(z)).collect();
    let mut nu = m;
    while values.len() < len {
        x = eq.companion_matrix(nu)? * &x;
        let q = sweep.slow_space(nu + 1, dim);
        x = &q * (q.adjoint() * &x);
        let h = h_norm(&x);
        values.push(LogComplex::from(x[n - 1]).scaled(log_scale));
        if h > 0.0 {
            x /= crate::linalg::c(h);
            log_scale += h.ln();
        }
        nu += 1;
    }
    values.truncate(len);
    Ok(SolutionTrajectory { start: m, order: n, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentFlag {
    ZeroSolution,
    SuperexponentialDecay,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GrowthExponent {
    /// `max exp(ln|y(ν)| / ν)` over the tail.
    pub estimate: f64,
    /// `exp` of the least-squares slope of `ln|y(ν)|` against `ν` on the tail.
    pub regression: f64,
    pub flag: Option<ExponentFlag>,
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Estimate of `limsup |y(ν)|^{1/ν}` from the last `tail_fraction` of `traj`.
pub fn growth_exponent(traj: &SolutionTrajectory, tail_fraction: f64) -> Result<GrowthExponent> {
    if traj.len() < 64 {
        return Err(Error::Config(format!("growth exponent needs at least 64 values, got {}", traj.len())));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Config(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let skip = traj.len() - ((traj.len() as f64 * tail_fraction).ceil() as usize).max(2);
    let points: Vec<(f64, f64)> = traj
        .values
        .iter()
        .enumerate()
        .skip(skip)
        .map(|(i, v)| ((traj.start + i as u64) as f64, v.ln_abs))
        .filter(|p| p.0 > 0.0 && p.1.is_finite())
        .collect();
    if points.len() < 2 {
        return Ok(GrowthExponent { estimate: 0.0, regression: 0.0, flag: Some(ExponentFlag::ZeroSolution) });
    }
    let estimate = points.iter().map(|p| (p.1 / p.0).exp()).fold(0.0, f64::max);
    let regression = slope(&points).exp();
    let half = points.len() / 2;
    let flag = if half >= 2 && points.len() - half >= 2 {
        let early = slope(&points[..half]);
        let late = slope(&points[half..]);
        (late < early - 0.05 && regression < 1.0).then_some(ExponentFlag::SuperexponentialDecay)
    } else {
        None
    };
    Ok(GrowthExponent { estimate, regression, flag })
}

/// One nested level `V^∧_θ` or complement `V^∨_θ` at the offset `m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSpace {
    pub theta: usize,
    pub rho: f64,
    pub dim: usize,
    #[serde(with = "crate::cser::mat")]
    pub basis: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentRecord {
    pub theta: usize,
    pub index: usize,
    pub rho: f64,
    pub exponent: GrowthExponent,
    /// `|regression − ρ_θ|`.
    pub deviation: f64,
    /// Whether `deviation` is held to `10 × cluster tolerance`.
    pub asserted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiltrationReport {
    pub start: u64,
    pub horizon: u64,
    pub sweep_end: u64,
    pub levels: Vec<LevelSpace>,
    pub complements: Vec<LevelSpace>,
    pub exponents: Vec<ExponentRecord>,
    /// Largest angle between the levels of two sweeps from different random frames.
    pub convergence_angle: f64,
    pub nesting_angle: f64,
    pub violations: Vec<String>,
    #[serde(skip)]
    pub sweep: FlagSweep,
    #[serde(skip)]
    pub config: FiltrationConfig,
    #[serde(skip)]
    pub profile: CharacteristicProfile,
}

impl FiltrationReport {
    pub fn s(&self) -> usize {
        self.profile.s()
    }

    /// `V^∧_θ` basis; empty when the level is trivial.
    pub fn level(&self, theta: usize) -> CMatrix {
        self.sweep.slow_space(self.start, self.profile.slow_dim(theta))
    }

    pub fn complement(&self, theta: usize) -> CMatrix {
        let n = self.profile.order();
        let hi = n - self.profile.slow_dim(theta + 1);
        let lo = n - self.profile.slow_dim(theta);
        self.sweep.frame(self.start).columns(lo, hi - lo).into_owned()
    }

    /// `V*_θ = V^∨_1 ⊕ … ⊕ V^∨_θ`.
    pub fn star(&self, theta: usize) -> CMatrix {
        let n = self.profile.order();
        let d = n - self.profile.slow_dim(theta + 1);
        self.sweep.frame(self.start).columns(0, d).into_owned()
    }

    /// Solution with initial window `x` known to lie in `V^∧_θ`.
    pub fn trajectory(&self, eq: &PoincareEquation, theta: usize, x: &CVector) -> Result<SolutionTrajectory> {
        let len = (self.horizon as usize) + eq.order();
        slow_trajectory(eq, &self.sweep, self.profile.slow_dim(theta), x, len)
    }

    /// Deepest level containing `x` (within the transversality tolerance).
    pub fn tightest_level(&self, x: &CVector) -> usize {
        let xm = CMatrix::from_column_slice(x.len(), 1, x.as_slice());
        let mut best = 1;
        for theta in 2..=self.s() + 1 {
            let d = self.profile.slow_dim(theta);
            if d > 0 && containment_angle(&xm, &self.level(theta)) < TRANSVERSALITY_TOL {
                best = theta;
            }
        }
        best
    }
}

/// Levels, complements and exponent checks for `eq`.
pub fn compute_filtration(eq: &PoincareEquation, profile: &CharacteristicProfile, config: &FiltrationConfig) -> Result<FiltrationReport> {
    let n = eq.order();
    if profile.order() != n {
        return Err(Error::Config(format!("profile has order {}, equation {n}", profile.order())));
    }
    let m = eq.start_offset();
    let h = config.horizon;
    let end = m + h + n as u64 + sweep_margin(profile);
    let sweep = flag_sweep(eq, m, end, config.seed)?;
    let check = flag_sweep(eq, m, end, config.seed ^ 0x9e37_79b9_7f4a_7c15)?;

    let s = profile.s();
    let mut convergence_angle: f64 = 0.0;
    let mut levels = Vec::new();
    for theta in 1..=s + 1 {
        let d = profile.slow_dim(theta);
        if d == 0 {
            continue;
        }
        let basis = sweep.slow_space(m, d);
        let angle = subspace_angle(&basis, &check.slow_space(m, d));
        if angle > config.angle_tol {
            return Err(Error::NonConverged { dim: d, angle });
        }
        convergence_angle = convergence_angle.max(angle);
        levels.push(LevelSpace { theta, rho: profile.rho(theta), dim: d, basis });
    }
    let mut nesting_angle: f64 = 0.0;
    for pair in levels.windows(2) {
        nesting_angle = nesting_angle.max(containment_angle(&pair[1].basis, &pair[0].basis));
    }

    let mut report = FiltrationReport {
        start: m,
        horizon: h,
        sweep_end: end,
        levels,
        complements: Vec::new(),
        exponents: Vec::new(),
        convergence_angle,
        nesting_angle,
        violations: Vec::new(),
        sweep,
        config: config.clone(),
        profile: profile.clone(),
    };
    for theta in 1..=s + 1 {
        if profile.e(theta) == 0 {
            continue;
        }
        let basis = report.complement(theta);
        report.complements.push(LevelSpace { theta, rho: profile.rho(theta), dim: basis.ncols(), basis });
    }
    if nesting_angle > config.angle_tol {
        report.violations.push(format!("filtration levels are not nested (angle {nesting_angle:.3e})"));
    }
    for (theta, d) in report.levels.iter().map(|l| (l.theta, l.dim)).collect::<Vec<_>>() {
        if d != profile.slow_dim(theta) {
            report.violations.push(format!("level {theta} has dimension {d}, expected {}", profile.slow_dim(theta)));
        }
    }

    let exact = eq.decay_class() == crate::equation::DecayClass::Exact;
    let tol = 10.0 * profile.cluster_tolerance;
    let mut records = Vec::new();
    for comp in &report.complements {
        for j in 0..comp.dim {
            let x = comp.basis.column(j).clone_owned();
            let traj = report.trajectory(eq, comp.theta, &x)?;
            let exponent = growth_exponent(&traj, config.tail_fraction)?;
            let deviation = (exponent.regression - comp.rho).abs();
            let asserted = exact && comp.theta <= s && profile.k(comp.theta) == 1;
            if asserted && deviation > tol * comp.rho.max(1.0) {
                report.violations.push(format!(
                    "growth exponent {:.9} of a level-{} complement vector differs from ρ = {:.9}",
                    exponent.regression, comp.theta, comp.rho
                ));
            }
            records.push(ExponentRecord { theta: comp.theta, index: j, rho: comp.rho, exponent, deviation, asserted });
        }
    }
    report.exponents = records;
    Ok(report)
}

/// A fitted envelope over a sample of solutions.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeCheck {
    pub label: String,
    pub theta: usize,
    pub side: Side,
    pub shape: EnvelopeShape,
    /// Largest per-solution constant over `ν ≤ m + H`.
    pub a_const: f64,
    /// The same over `ν ≤ m + H/2`.
    pub a_half: f64,
    pub samples: usize,
    pub finite: bool,
    pub stable: bool,
    /// Reported for comparison only; never counted as a violation.
    pub informational: bool,
    /// `(ν, ln ω(ν) − ln ω(m), ln envelope)` for the binding solution.
    #[serde(skip)]
    pub margin: Vec<(u64, f64, f64)>,
}

impl EnvelopeCheck {
    pub fn passed(&self) -> bool {
        self.informational || (self.finite && self.stable)
    }
}

pub fn is_stable(full: f64, half: f64) -> bool {
    full.is_finite() && half.is_finite() && full <= STABILITY_RATIO * half + 1e-9
}

/// `(ν, ln ω(ν) − ln ω(m))`, or `ln|y(ν)|` when `pointwise`, for `ν ≥ max(m, 1)`.
fn ratio_series(traj: &SolutionTrajectory, n: usize, horizon: u64, pointwise: bool) -> Result<Vec<(u64, f64)>> {
    let m = traj.start;
    let base = traj.ln_window_norm(m, n)?;
    let mut out = Vec::with_capacity(horizon as usize);
    for nu in m.max(1)..=m + horizon {
        let v = if pointwise { traj.get(nu).map(|v| v.ln_abs).unwrap_or(f64::NEG_INFINITY) } else { traj.ln_window_norm(nu, n)? };
        out.push((nu, v - base));
    }
    Ok(out)
}

/// Unit-`ω(m)` vectors in the span of `basis`.
fn sample_vectors(basis: &CMatrix, count: usize, rng: &mut impl Rng) -> Vec<CVector> {
    let d = basis.ncols();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let coeffs = if i < d {
            CVector::from_fn(d, |r, _| crate::linalg::c(if r == i { 1.0 } else { 0.0 }))
        } else {
            CVector::from_fn(d, |_, _| random_complex(rng))
        };
        let x = basis * coeffs;
        let h = h_norm(&x);
        out.push(x / crate::linalg::c(h));
    }
    out
}

struct FitInput<'a> {
    label: String,
    theta: usize,
    shape: EnvelopeShape,
    side: Side,
    pointwise: bool,
    level: usize,
    vectors: &'a [CVector],
    informational: bool,
}

fn fit_check(eq: &PoincareEquation, report: &FiltrationReport, input: FitInput) -> Result<EnvelopeCheck> {
    let n = eq.order();
    let h = report.horizon;
    let cut = report.start + h / 2;
    let mut a_const = f64::NEG_INFINITY;
    let mut a_half = f64::NEG_INFINITY;
    let mut margin = Vec::new();
    let mut degenerate = false;
    for x in input.vectors {
        let traj = report.trajectory(eq, input.level, x)?;
        let series = ratio_series(&traj, n, h, input.pointwise)?;
        let half: Vec<_> = series.iter().copied().filter(|p| p.0 <= cut).collect();
        let (full_fit, half_fit) = match (
            fit_envelope_constant(&series, &input.shape, input.side),
            fit_envelope_constant(&half, &input.shape, input.side),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::DegenerateSeries { .. }), _) | (_, Err(Error::DegenerateSeries { .. })) => {
                degenerate = true;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        a_half = a_half.max(half_fit);
        if full_fit > a_const {
            a_const = full_fit;
            let env = GrowthEnvelope { shape: input.shape, a_const: full_fit, side: input.side };
            margin = series.iter().map(|&(nu, v)| (nu, v, env.ln_value(nu))).collect();
        }
    }
    let finite = !degenerate && a_const.is_finite() && a_half.is_finite();
    Ok(EnvelopeCheck {
        label: input.label,
        theta: input.theta,
        side: input.side,
        shape: input.shape,
        a_const,
        a_half,
        samples: input.vectors.len(),
        finite,
        stable: is_stable(a_const, a_half),
        informational: input.informational,
        margin,
    })
}

/// Result of one verification stage.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub checks: Vec<EnvelopeCheck>,
    pub corollary: Vec<CorollaryCheck>,
    pub notes: Vec<String>,
    pub violations: Vec<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    fn push(&mut self, check: EnvelopeCheck) {
        if !check.passed() {
            self.violations.push(format!(
                "{}: fitted constant {:.6e} (half horizon {:.6e}) is {}",
                check.label,
                check.a_const,
                check.a_half,
                if check.finite { "unstable" } else { "not finite" }
            ));
        }
        self.checks.push(check);
    }
}

fn k_max(profile: &CharacteristicProfile) -> usize {
    (1..=profile.s()).map(|t| profile.k(t)).max().unwrap_or(1)
}

/// Lower bounds on `V^∨_θ`, upper bounds on `V^∧_θ` and the factorial bound on
/// the zero cluster, each fitted over the sample.
pub fn verify_theorem7(report: &FiltrationReport, eq: &PoincareEquation) -> Result<CheckReport> {
    let profile = &report.profile;
    let s = profile.s();
    let mut out = CheckReport::new("verify7");
    let mut rng = rng_for(report.config.seed, 7);
    for theta in 1..=s {
        let rho = profile.rho(theta);
        let k = profile.k(theta);
        let comp = report.complement(theta);
        let vectors = sample_vectors(&comp, report.config.samples, &mut rng);
        let shape = EnvelopeShape { rho, k, mode: EnvelopeMode::PolyLog };
        let lower = fit_check(
            eq,
            report,
            FitInput {
                label: format!("lower bound on V∨_{theta}"),
                theta,
                shape,
                side: Side::Lower,
                pointwise: false,
                level: theta,
                vectors: &vectors,
                informational: false,
            },
        )?;

        // observed deficit α̂(ν) of the projected lower bound at the horizon
        let level = report.level(theta);
        let level_vectors = sample_vectors(&level, report.config.samples, &mut rng);
        let upper = fit_check(
            eq,
            report,
            FitInput {
                label: format!("upper bound on V∧_{theta}"),
                theta,
                shape,
                side: Side::Upper,
                pointwise: false,
                level: theta,
                vectors: &level_vectors,
                informational: false,
            },
        )?;
        if lower.finite {
            let deficit = projection_deficit(eq, report, theta, &level_vectors, lower.a_const)?;
            out.notes.push(format!("projected lower bound on V∧_{theta}: largest deficit α̂ at the horizon {deficit:.3e}"));
        }
        out.push(lower);
        out.push(upper);
        if k > 1 {
            let flat = EnvelopeShape { rho, k: 1, mode: EnvelopeMode::PolyLog };
            out.push(fit_check(
                eq,
                report,
                FitInput {
                    label: format!("upper bound on V∧_{theta} with k = 1"),
                    theta,
                    shape: flat,
                    side: Side::Upper,
                    pointwise: false,
                    level: theta,
                    vectors: &level_vectors,
                    informational: true,
                },
            )?);
        }
    }
    if profile.k_star() > 0 {
        let comp = report.complement(s + 1);
        let vectors = sample_vectors(&comp, report.config.samples, &mut rng);
        out.push(fit_check(
            eq,
            report,
            FitInput {
                label: "factorial bound on the zero cluster".into(),
                theta: s + 1,
                shape: EnvelopeShape { rho: 0.0, k: profile.k_star(), mode: EnvelopeMode::Factorial },
                side: Side::Upper,
                pointwise: true,
                level: s + 1,
                vectors: &vectors,
                informational: false,
            },
        )?);
    }
    Ok(out)
}

/// `max_y α̂(m + H)` with `α̂(ν) = (ω_{π y}(m) − ω_y(ν) e^{Aφ(ν)} ρ^{−ν}) / ω_y(m)`, clamped at zero.
fn projection_deficit(eq: &PoincareEquation, report: &FiltrationReport, theta: usize, vectors: &[CVector], a: f64) -> Result<f64> {
    let comp = report.complement(theta);
    let n = eq.order();
    let rho = report.profile.rho(theta);
    let k = report.profile.k(theta);
    let nu = report.start + report.horizon;
    let phi = (nu as f64).powf(1.0 - 1.0 / k as f64) + (nu as f64).ln();
    let mut worst: f64 = 0.0;
    for x in vectors {
        let proj = &comp * (comp.adjoint() * x);
        let traj = report.trajectory(eq, theta, x)?;
        let ln_w = traj.ln_window_norm(nu, n)?;
        let bound = (ln_w + a * phi - nu as f64 * rho.ln()).exp();
        worst = worst.max((h_norm(&proj) - bound) / h_norm(x));
    }
    Ok(worst)
}

/// Subspace of initial windows for the uniform lower bound.
#[derive(Clone, Debug)]
pub enum SubspaceSpec {
    /// `V*_θ`.
    Star { theta: usize },
    /// `(I + ξ)(V*_θ)`, `ξ` mapping `V*_θ`-coordinates to `V^∧_{θ+1}`-coordinates.
    Graph { theta: usize, xi: CMatrix },
    /// Any subspace meeting `V^∧_{θ+1}` only in zero.
    Given { theta: usize, basis: CMatrix },
}

impl SubspaceSpec {
    pub fn theta(&self) -> usize {
        match self {
            SubspaceSpec::Star { theta } | SubspaceSpec::Graph { theta, .. } | SubspaceSpec::Given { theta, .. } => *theta,
        }
    }

    pub fn resolve(&self, report: &FiltrationReport) -> Result<CMatrix> {
        let theta = self.theta();
        if theta == 0 || theta > report.s() {
            return Err(Error::Config(format!("θ = {theta} is outside 1..={}", report.s())));
        }
        Ok(match self {
            SubspaceSpec::Star { .. } => report.star(theta),
            SubspaceSpec::Graph { xi, .. } => {
                let star = report.star(theta);
                let slow = report.level(theta + 1);
                if xi.nrows() != slow.ncols() || xi.ncols() != star.ncols() {
                    return Err(Error::Config(format!(
                        "ξ must be {}×{}, got {}×{}",
                        slow.ncols(),
                        star.ncols(),
                        xi.nrows(),
                        xi.ncols()
                    )));
                }
                &star + &slow * xi
            }
            SubspaceSpec::Given { basis, .. } => basis.clone(),
        })
    }
}

/// Random `dim`-dimensional subspace of `V_m` transversal to `V^∧_{θ+1}`.
pub fn random_transversal(report: &FiltrationReport, theta: usize, dim: usize, rng: &mut impl Rng) -> CMatrix {
    let star = report.star(theta);
    let slow = report.level(theta + 1);
    let d = dim.min(star.ncols()).max(1);
    let a = CMatrix::from_fn(star.ncols(), d, |_, _| random_complex(rng));
    let b = CMatrix::from_fn(slow.ncols(), d, |_, _| random_complex(rng));
    &star * a + &slow * b
}

/// Uniform lower bound at `ρ_θ` with `k = max k_i` over a sampled subspace.
pub fn verify_theorem8_10(report: &FiltrationReport, eq: &PoincareEquation, spec: &SubspaceSpec) -> Result<CheckReport> {
    let theta = spec.theta();
    let basis = spec.resolve(report)?;
    let slow = report.level(theta + 1);
    if slow.ncols() > 0 {
        let angle = min_principal_angle(&basis, &slow);
        if angle <= TRANSVERSALITY_TOL {
            return Err(Error::InvalidSubspace { angle });
        }
    }
    let mut out = CheckReport::new("verify8_10");
    let mut rng = rng_for(report.config.seed, 10 + theta as u64);
    let vectors = sample_vectors(&orthonormalize(&basis), report.config.samples, &mut rng);
    let label = match spec {
        SubspaceSpec::Star { .. } => format!("uniform lower bound on V*_{theta}"),
        SubspaceSpec::Graph { .. } => format!("uniform lower bound on a graph over V*_{theta}"),
        SubspaceSpec::Given { .. } => format!("uniform lower bound on a subspace transversal to V∧_{}", theta + 1),
    };
    let shape = EnvelopeShape { rho: report.profile.rho(theta), k: k_max(&report.profile), mode: EnvelopeMode::PolyLog };
    out.push(fit_check(
        eq,
        report,
        FitInput { label, theta, shape, side: Side::Lower, pointwise: false, level: 1, vectors: &vectors, informational: false },
    )?);
    Ok(out)
}

/// Two-sided `C₄(ρ_{k₄}(1−ε))^ν h(X) ≤ ω_y(ν) ≤ C₃(ρ_{k₃}+ε)^ν h(X)` on one subspace.
#[derive(Clone, Debug, Serialize)]
pub struct CorollaryCheck {
    pub label: String,
    pub k3: usize,
    pub k4: usize,
    pub ln_c3: f64,
    pub ln_c4: f64,
    pub ln_c3_half: f64,
    pub ln_c4_half: f64,
    pub stable: bool,
}

/// ε-geometric bounds for equations whose coefficients only converge.
pub fn verify_section5(report: &FiltrationReport, eq: &PoincareEquation, epsilon: f64) -> Result<CheckReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let profile = &report.profile;
    let s = profile.s();
    let mut out = CheckReport::new("verify5");
    let mut rng = rng_for(report.config.seed, 5);
    let samples = report.config.samples;
    for theta in 1..=s {
        let rho = profile.rho(theta);
        let level = report.level(theta);
        let vectors = sample_vectors(&level, samples, &mut rng);
        out.push(fit_check(
            eq,
            report,
            FitInput {
                label: format!("ε-upper bound on V∧_{theta}"),
                theta,
                shape: EnvelopeShape { rho, k: 1, mode: EnvelopeMode::EpsilonGeometric { epsilon } },
                side: Side::Upper,
                pointwise: false,
                level: theta,
                vectors: &vectors,
                informational: false,
            },
        )?);
        let star = report.star(theta);
        let vectors = sample_vectors(&star, samples, &mut rng);
        out.push(fit_check(
            eq,
            report,
            FitInput {
                label: format!("ε-lower bound on V*_{theta}"),
                theta,
                shape: EnvelopeShape { rho, k: 1, mode: EnvelopeMode::EpsilonGeometric { epsilon: -epsilon } },
                side: Side::Lower,
                pointwise: false,
                level: 1,
                vectors: &vectors,
                informational: false,
            },
        )?);
    }
    if profile.e(s + 1) > 0 {
        let comp = report.complement(s + 1);
        let vectors = sample_vectors(&comp, samples, &mut rng);
        out.push(fit_check(
            eq,
            report,
            FitInput {
                label: "ε-decay bound on the zero cluster".into(),
                theta: s + 1,
                shape: EnvelopeShape { rho: 1.0, k: 1, mode: EnvelopeMode::EpsilonGeometric { epsilon: -epsilon } },
                side: Side::Upper,
                pointwise: false,
                level: s + 1,
                vectors: &vectors,
                informational: false,
            },
        )?);
    }
    if s > 0 {
        let mut spaces = vec![(format!("V*_{s}"), report.star(s), 1usize)];
        for theta in 1..=s {
            spaces.push((format!("V∨_{theta}"), report.complement(theta), theta));
        }
        for (label, basis, level) in spaces {
            let check = corollary_check(eq, report, &label, &basis, level, epsilon, &mut rng)?;
            if !(check.ln_c3.is_finite() && check.ln_c4.is_finite() && check.stable) {
                out.violations.push(format!(
                    "two-sided bound on {label}: ln C₃ = {:.4e}, ln C₄ = {:.4e}, stable = {}",
                    check.ln_c3, check.ln_c4, check.stable
                ));
            }
            out.corollary.push(check);
        }
    }
    Ok(out)
}

fn corollary_check(
    eq: &PoincareEquation,
    report: &FiltrationReport,
    label: &str,
    basis: &CMatrix,
    level: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<CorollaryCheck> {
    let profile = &report.profile;
    let s = profile.s();
    let n = eq.order();
    let k3 = (1..=s).filter(|&k| containment_angle(basis, &report.level(k)) < TRANSVERSALITY_TOL).max().unwrap_or(1);
    let k4 = (1..=s)
        .find(|&k| {
            let slow = report.level(k + 1);
            slow.ncols() == 0 || min_principal_angle(basis, &slow) > TRANSVERSALITY_TOL
        })
        .unwrap_or(s);
    let up = (profile.rho(k3) + epsilon).ln();
    let down = (profile.rho(k4) * (1.0 - epsilon)).ln();
    let r = basis.ncols();
    let cut = report.start + report.horizon / 2;
    let (mut c3, mut c4, mut c3h, mut c4h) = (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..report.config.samples.max(r) {
        let x = if i < r {
            CVector::from_fn(r, |j, _| crate::linalg::c(if i == j { 1.0 } else { 0.0 }))
        } else {
            CVector::from_fn(r, |_, _| random_complex(rng))
        };
        let ln_hx = h_norm(&x).ln();
        let traj = report.trajectory(eq, level, &(basis * &x))?;
        for nu in report.start.max(1)..=report.start + report.horizon {
            let w = traj.ln_window_norm(nu, n)? - ln_hx;
            let hi = w - nu as f64 * up;
            let lo = w - nu as f64 * down;
            c3 = c3.max(hi);
            c4 = c4.min(lo);
            if nu <= cut {
                c3h = c3h.max(hi);
                c4h = c4h.min(lo);
            }
        }
    }
    // C₄ is a minimum: stability means it does not shrink by more than the same ratio
    let stable = is_stable(c3.max(0.0), c3h.max(0.0)) && is_stable((-c4).max(0.0), (-c4h).max(0.0));
    Ok(CorollaryCheck { label: label.into(), k3, k4, ln_c3: c3, ln_c4: c4, ln_c3_half: c3h, ln_c4_half: c4h, stable })
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
    fn exponent_examples() {
        let pow2: Vec<C64> = (0..256).map(|k| c(2f64.powi(k))).collect();
        let t = SolutionTrajectory::from_values(0, 1, &pow2);
        assert!((growth_exponent(&t, 0.5).unwrap().estimate - 2.0).abs() < 1e-6);

        let fib = PoincareEquation::constant(&[c(-1.0), c(-1.0)]);
        let t = fib.solve(0, &[c(0.0), c(1.0)], 2048).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((growth_exponent(&t, 0.5).unwrap().estimate - phi).abs() < 1e-3);

        let mut lf = 0.0;
        let vals: Vec<LogComplex> = (0..256u64)
            .map(|k| {
                if k > 0 {
                    lf += (k as f64).ln();
                }
                LogComplex { ln_abs: -lf, phase: c(1.0) }
            })
            .collect();
        let t = SolutionTrajectory { start: 0, order: 1, values: vals };
        let g = growth_exponent(&t, 0.5).unwrap();
        assert_eq!(g.flag, Some(ExponentFlag::SuperexponentialDecay));
        assert!(g.estimate < 0.05);

        let zero = SolutionTrajectory::from_values(0, 1, &[c(0.0); 64]);
        assert_eq!(growth_exponent(&zero, 0.5).unwrap().flag, Some(ExponentFlag::ZeroSolution));
        assert!(growth_exponent(&SolutionTrajectory::from_values(0, 1, &[c(1.0); 10]), 0.5).is_err());
    }

    #[test]
    fn roots_two_and_one() {
        let eq = PoincareEquation::constant(&[c(2.0), c(-3.0)]);
        let p = profile(&eq);
        let rep = compute_filtration(&eq, &p, &FiltrationConfig::default().with_horizon(200)).unwrap();
        assert_eq!(rep.levels.iter().map(|l| l.dim).collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(rep.complements.iter().map(|l| l.dim).collect::<Vec<_>>(), vec![1, 1]);
        // the 1^ν solution has window (1, 1)
        let ones = CMatrix::from_element(2, 1, c(1.0));
        assert!(subspace_angle(&rep.level(2), &ones) < 1e-10);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }

    #[test]
    fn fibonacci_slow_level() {
        let eq = PoincareEquation::constant(&[c(-1.0), c(-1.0)]);
        let rep = compute_filtration(&eq, &profile(&eq), &FiltrationConfig::default().with_horizon(200)).unwrap();
        let psi = (1.0 - 5f64.sqrt()) / 2.0;
        let binet = CMatrix::from_column_slice(2, 1, &[c(1.0), c(psi)]);
        assert!(subspace_angle(&rep.level(2), &binet) < 1e-10);
    }

    #[test]
    fn zero_cluster_decays_factorially() {
        let eq = PoincareEquation::new(
            vec![
                crate::equation::CoefficientSequence::rational(vec![c(1.0)], vec![c(1.0), c(1.0)], crate::equation::DecayClass::InverseNu),
                crate::equation::CoefficientSequence::constant(c(-1.0)),
                crate::equation::CoefficientSequence::constant(c(1.0)),
            ],
            0,
        )
        .unwrap();
        let p = profile(&eq);
        assert_eq!(p.k_star(), 1);
        let rep = compute_filtration(&eq, &p, &FiltrationConfig::default().with_horizon(200)).unwrap();
        let e = rep.exponents.iter().find(|r| r.theta == 2).unwrap();
        assert_eq!(e.exponent.flag, Some(ExponentFlag::SuperexponentialDecay));
        let check = verify_theorem7(&rep, &eq).unwrap();
        assert!(check.violations.is_empty(), "{:?}", check.violations);
    }

    #[test]
    fn level_two_is_not_transversal() {
        let eq = PoincareEquation::constant(&[c(2.0), c(-3.0)]);
        let rep = compute_filtration(&eq, &profile(&eq), &FiltrationConfig::default().with_horizon(200)).unwrap();
        let spec = SubspaceSpec::Given { theta: 1, basis: rep.level(2) };
        assert!(matches!(verify_theorem8_10(&rep, &eq, &spec), Err(Error::InvalidSubspace { .. })));
        let sum = CMatrix::from_column_slice(2, 1, &[c(2.0), c(3.0)]);
        let ok = verify_theorem8_10(&rep, &eq, &SubspaceSpec::Given { theta: 1, basis: sum }).unwrap();
        assert!(ok.violations.is_empty());
    }
}
