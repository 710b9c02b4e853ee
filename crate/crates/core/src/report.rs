//! Batch driver behind `plab analyze`: reads a run configuration, runs the
//! selected stages in dependency order and writes a JSON report plus one CSV
//! file per series.
//!
//! `report.json` holds only deterministic content. Wall-clock times per stage
//! go to the `timings.json` sidecar next to it.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{fit_envelope_constant, transfer_log_norm_with, Direction, EnvelopeMode, EnvelopeShape, GrowthEnvelope, LogTransferProduct, Side};
use crate::equation::{EquationSpec, PoincareEquation, C64};
use crate::error::{Error, Result};
use crate::factor::{factorize, Factorization};
use crate::filtration::{
    compute_filtration, random_complex, random_transversal, verify_section5, verify_theorem7, verify_theorem8_10, CheckReport, FiltrationConfig,
    FiltrationReport, SubspaceSpec, DEFAULT_ANGLE_TOL, DEFAULT_SAMPLES, DEFAULT_SEED,
};
use crate::linalg::{h_op, CMatrix};
use crate::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};

pub const MIN_HORIZON: u64 = 64;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;
pub const THREADS_ENV: &str = "PLAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_STAGE_ERROR: i32 = 3;
pub const EXIT_CONFIG_ERROR: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Profile,
    Envelope,
    Filtration,
    Factorize,
    Verify7,
    #[serde(rename = "verify8_10")]
    Verify8_10,
    Verify5,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Profile, Stage::Envelope, Stage::Filtration, Stage::Factorize, Stage::Verify7, Stage::Verify8_10, Stage::Verify5];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Profile => "profile",
            Stage::Envelope => "envelope",
            Stage::Filtration => "filtration",
            Stage::Factorize => "factorize",
            Stage::Verify7 => "verify7",
            Stage::Verify8_10 => "verify8_10",
            Stage::Verify5 => "verify5",
        }
    }

    pub fn parse(name: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown stage {name:?}")))
    }

    fn dependency(self) -> Option<Stage> {
        match self {
            Stage::Profile => None,
            Stage::Envelope | Stage::Filtration | Stage::Factorize => Some(Stage::Profile),
            Stage::Verify7 | Stage::Verify8_10 | Stage::Verify5 => Some(Stage::Filtration),
        }
    }
}

pub fn default_stages() -> Vec<Stage> {
    vec![Stage::Profile, Stage::Envelope, Stage::Filtration]
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum EquationSource {
    Inline(EquationSpec),
    Path(PathBuf),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Tolerances {
    pub cluster_tol: f64,
    pub residual_tol: f64,
    pub angle_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cluster_tol: DEFAULT_CLUSTER_TOL, residual_tol: DEFAULT_RESIDUAL_TOL, angle_tol: DEFAULT_ANGLE_TOL }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
}

impl OutputPaths {
    /// `DIR/report.json` and `DIR/csv`.
    pub fn in_dir(dir: &Path) -> Self {
        Self { report: Some(dir.join("report.json")), csv_dir: Some(dir.join("csv")) }
    }
}

fn default_horizon() -> u64 {
    crate::filtration::DEFAULT_HORIZON
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub equation: EquationSource,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing)]
    pub output: OutputPaths,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl RunConfig {
    pub fn new(equation: EquationSpec) -> Self {
        Self {
            equation: EquationSource::Inline(equation),
            stages: default_stages(),
            horizon: default_horizon(),
            tolerances: Tolerances::default(),
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            output: OutputPaths::default(),
            epsilon: None,
        }
    }

    /// Reads a configuration; relative equation paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let EquationSource::Path(p) = &mut config.equation {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < MIN_HORIZON {
            return Err(Error::Config(format!("horizon must be at least {MIN_HORIZON}, got {}", self.horizon)));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("no stages selected".into()));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Config(format!("epsilon must lie in (0, 1), got {eps}")));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [("cluster_tol", t.cluster_tol), ("residual_tol", t.residual_tol), ("angle_tol", t.angle_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        Ok(())
    }

    pub fn load_equation(&self) -> Result<PoincareEquation> {
        let spec = match &self.equation {
            EquationSource::Inline(spec) => spec.clone(),
            EquationSource::Path(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        spec.into_equation().map_err(|e| Error::Config(e.to_string()))
    }

    /// Requested stages plus their dependencies, in execution order.
    pub fn resolved_stages(&self) -> Vec<Stage> {
        let mut set = BTreeSet::new();
        for &stage in &self.stages {
            let mut s = Some(stage);
            while let Some(st) = s {
                set.insert(st);
                s = st.dependency();
            }
        }
        set.into_iter().collect()
    }
}

/// A solution's window norms against fitted envelopes and the transfer product norm.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeSection {
    pub forward: LogTransferProduct,
    /// `exp` of the mean log growth per step of the transfer product.
    pub growth_rate: f64,
    pub inverse: Option<LogTransferProduct>,
    pub inverse_error: Option<String>,
    pub shape: EnvelopeShape,
    pub upper_constant: f64,
    pub lower_constant: Option<f64>,
    #[serde(skip)]
    pub rows: Vec<EnvelopeRow>,
}

#[derive(Clone, Copy, Debug)]
pub struct EnvelopeRow {
    pub nu: u64,
    pub ln_omega: f64,
    pub ln_upper: f64,
    pub ln_lower: f64,
    pub ln_transfer: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub stages: Vec<Stage>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub profile: Option<CharacteristicProfile>,
    pub envelope: Option<EnvelopeSection>,
    pub filtration: Option<FiltrationReport>,
    pub factorization: Option<Factorization>,
    pub checks: Vec<CheckReport>,
    pub stage_errors: Vec<StageFailure>,
    pub skipped: Vec<Stage>,
    pub violations: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<(Stage, f64)>,
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        if !self.stage_errors.is_empty() {
            EXIT_STAGE_ERROR
        } else if !self.violations.is_empty() {
            EXIT_VIOLATIONS
        } else {
            EXIT_OK
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Named series as CSV text, in a fixed order.
    pub fn csv_series(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if let Some(env) = &self.envelope {
            let mut text = String::from("nu,ln_omega,ln_envelope_upper,ln_envelope_lower,ln_transfer\n");
            for r in &env.rows {
                text.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", r.nu, r.ln_omega, r.ln_upper, r.ln_lower, r.ln_transfer));
            }
            out.push(("envelope".to_string(), text));
        }
        for report in &self.checks {
            for (i, check) in report.checks.iter().enumerate() {
                let bound = match check.side {
                    Side::Upper => "ln_bound_upper",
                    Side::Lower => "ln_bound_lower",
                };
                let mut text = format!("nu,ln_value,{bound}\n");
                for &(nu, v, b) in &check.margin {
                    text.push_str(&format!("{nu},{v:e},{b:e}\n"));
                }
                out.push((format!("{}_{:02}", report.name, i), text));
            }
        }
        out
    }

    /// Writes the report, the timings sidecar and the CSV series.
    pub fn write(&self, paths: &OutputPaths) -> Result<()> {
        if let Some(report) = &paths.report {
            if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(report, self.to_json()?)?;
            let timings: Vec<_> = self.timings.iter().map(|(s, t)| serde_json::json!({"stage": s, "seconds": t})).collect();
            fs::write(report.with_file_name("timings.json"), serde_json::to_string_pretty(&timings)? + "\n")?;
        }
        if let Some(dir) = &paths.csv_dir {
            fs::create_dir_all(dir)?;
            for (name, text) in self.csv_series() {
                fs::write(dir.join(format!("{name}.csv")), text)?;
            }
        }
        Ok(())
    }
}

fn envelope_stage(eq: &PoincareEquation, profile: &CharacteristicProfile, config: &RunConfig) -> Result<EnvelopeSection> {
    let m = eq.start_offset().max(1);
    let end = m + config.horizon;
    let forward = transfer_log_norm_with(eq, profile, m, end, Direction::Forward)?;
    let (inverse, inverse_error) = match transfer_log_norm_with(eq, profile, m, end, Direction::Inverse) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let n = eq.order();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let window: Vec<C64> = (0..n).map(|_| random_complex(&mut rng)).collect();
    let traj = eq.solve(m, &window, config.horizon as usize + n + 1)?;
    let base = traj.ln_window_norm(m, n)?;
    let series: Vec<(u64, f64)> = (m..=end).map(|nu| traj.ln_window_norm(nu, n).map(|w| (nu, w - base))).collect::<Result<_>>()?;

    let (rho, k) = if profile.s() > 0 { (profile.rho(1), profile.k(1)) } else { (0.0, profile.k_star().max(1)) };
    let mode = if profile.s() > 0 { EnvelopeMode::PolyLog } else { EnvelopeMode::Factorial };
    let shape = EnvelopeShape { rho, k, mode };
    let upper_constant = fit_envelope_constant(&series, &shape, Side::Upper)?;
    let lower_constant = fit_envelope_constant(&series, &shape, Side::Lower).ok();
    let up = GrowthEnvelope { shape, a_const: upper_constant, side: Side::Upper };
    let lo = lower_constant.map(|a| GrowthEnvelope { shape, a_const: a, side: Side::Lower });

    let mut product = CMatrix::identity(n, n);
    let mut ln_scale = 0.0;
    let mut rows = Vec::with_capacity(series.len());
    for &(nu, ln_omega) in &series {
        let h = h_op(&product);
        rows.push(EnvelopeRow {
            nu,
            ln_omega,
            ln_upper: up.ln_value(nu),
            ln_lower: lo.map(|e| e.ln_value(nu)).unwrap_or(f64::NAN),
            ln_transfer: ln_scale + h.ln(),
        });
        product = eq.companion_matrix(nu)? * product;
        let h = h_op(&product);
        if h > 0.0 {
            product /= crate::linalg::c(h);
            ln_scale += h.ln();
        }
    }
    Ok(EnvelopeSection { growth_rate: forward.per_step().exp(), forward, inverse, inverse_error, shape, upper_constant, lower_constant, rows })
}

fn verify_stage(stage: Stage, filtration: &FiltrationReport, eq: &PoincareEquation, config: &RunConfig) -> Result<CheckReport> {
    match stage {
        Stage::Verify7 => verify_theorem7(filtration, eq),
        Stage::Verify8_10 => {
            let mut out = CheckReport { name: "verify8_10".into(), ..Default::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x810);
            for theta in 1..=filtration.s() {
                let mut specs = vec![SubspaceSpec::Star { theta }];
                let dim = filtration.star(theta).ncols();
                specs.push(SubspaceSpec::Given { theta, basis: random_transversal(filtration, theta, dim, &mut rng) });
                for spec in specs {
                    let r = verify_theorem8_10(filtration, eq, &spec)?;
                    out.checks.extend(r.checks);
                    out.violations.extend(r.violations);
                }
            }
            Ok(out)
        }
        Stage::Verify5 => verify_section5(filtration, eq, config.epsilon.unwrap_or(DEFAULT_EPSILON)),
        _ => unreachable!("not a verification stage"),
    }
}

fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// Runs every stage of `config`. Only configuration problems are returned as
/// errors; stage failures are recorded in the report.
pub fn run(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let eq = config.load_equation()?;
    let stages = config.resolved_stages();
    let mut report = AnalysisReport {
        provenance: Provenance { tool: "plab", version: env!("CARGO_PKG_VERSION"), config: config.clone(), stages: stages.clone() },
        profile: None,
        envelope: None,
        filtration: None,
        factorization: None,
        checks: Vec::new(),
        stage_errors: Vec::new(),
        skipped: Vec::new(),
        violations: Vec::new(),
        timings: Vec::new(),
    };
    let fail = |report: &mut AnalysisReport, stage: Stage, e: Error| report.stage_errors.push(StageFailure { stage, message: e.to_string() });

    let clock = Instant::now();
    match CharacteristicProfile::from_equation(&eq, config.tolerances.cluster_tol) {
        Ok(p) => report.profile = Some(p),
        Err(e) => fail(&mut report, Stage::Profile, e),
    }
    report.timings.push((Stage::Profile, clock.elapsed().as_secs_f64()));

    for stage in stages.iter().copied().filter(|s| matches!(s, Stage::Envelope | Stage::Filtration | Stage::Factorize)) {
        let Some(profile) = report.profile.clone() else {
            report.skipped.push(stage);
            continue;
        };
        let clock = Instant::now();
        match stage {
            Stage::Envelope => match envelope_stage(&eq, &profile, config) {
                Ok(s) => report.envelope = Some(s),
                Err(e) => fail(&mut report, stage, e),
            },
            Stage::Filtration => {
                let fc = FiltrationConfig {
                    horizon: config.horizon,
                    seed: config.seed,
                    samples: config.samples,
                    angle_tol: config.tolerances.angle_tol,
                    ..FiltrationConfig::default()
                };
                match compute_filtration(&eq, &profile, &fc) {
                    Ok(f) => {
                        report.violations.extend(f.violations.iter().map(|v| format!("filtration: {v}")));
                        report.filtration = Some(f);
                    }
                    Err(e) => fail(&mut report, stage, e),
                }
            }
            Stage::Factorize => match factorize(&eq, &profile, config.horizon) {
                Ok(f) => {
                    if !(f.residual <= config.tolerances.residual_tol) {
                        report.violations.push(format!("factorize: composition residual {:.3e} exceeds {:.1e}", f.residual, config.tolerances.residual_tol));
                    }
                    report.factorization = Some(f);
                }
                Err(e) => fail(&mut report, stage, e),
            },
            _ => unreachable!(),
        }
        report.timings.push((stage, clock.elapsed().as_secs_f64()));
    }

    let verify: Vec<Stage> = stages.iter().copied().filter(|s| matches!(s, Stage::Verify7 | Stage::Verify8_10 | Stage::Verify5)).collect();
    if let Some(filtration) = &report.filtration {
        let results: Vec<(Stage, Result<CheckReport>, f64)> = thread_pool().install(|| {
            verify
                .par_iter()
                .map(|&stage| {
                    let clock = Instant::now();
                    let r = verify_stage(stage, filtration, &eq, config);
                    (stage, r, clock.elapsed().as_secs_f64())
                })
                .collect()
        });
        for (stage, result, secs) in results {
            match result {
                Ok(check) => {
                    report.violations.extend(check.violations.iter().map(|v| format!("{}: {v}", stage.name())));
                    report.checks.push(check);
                }
                Err(e) => fail(&mut report, stage, e),
            }
            report.timings.push((stage, secs));
        }
    } else {
        report.skipped.extend(verify);
    }
    Ok(report)
}
