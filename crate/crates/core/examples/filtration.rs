//! Nested solution spaces by growth rate and the checks fitted on them.
use plab::filtration::{compute_filtration, verify_theorem7, FiltrationConfig};
use plab::linalg::c;
use plab::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};
use plab::{PoincareEquation, C64};

fn main() -> plab::Result<()> {
    let eq = PoincareEquation::from_roots(&[c(3.0), C64::new(0.0, 1.5), c(0.5)]);
    let profile = CharacteristicProfile::from_equation(&eq, DEFAULT_CLUSTER_TOL)?;
    let report = compute_filtration(&eq, &profile, &FiltrationConfig::default().with_horizon(500))?;
    for level in &report.levels {
        println!("level θ={}: ρ = {}, dim {}", level.theta, level.rho, level.dim);
    }
    for e in &report.exponents {
        println!("  θ={} sample {}: estimate {:.6}", e.theta, e.index, e.exponent.estimate);
    }
    let checks = verify_theorem7(&report, &eq)?;
    for check in &checks.checks {
        println!("{}: A = {:.4} (half horizon {:.4})", check.label, check.a_const, check.a_half);
    }
    println!("violations: {}", checks.violations.len());
    Ok(())
}
