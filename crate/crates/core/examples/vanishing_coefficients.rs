//! ε-geometric bounds when the coefficients converge only like 1/ln ν.
use plab::equation::Rule;
use plab::filtration::{compute_filtration, verify_section5, FiltrationConfig};
use plab::linalg::c;
use plab::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};
use plab::{CoefficientSequence, DecayClass, PoincareEquation};

fn main() -> plab::Result<()> {
    let a1 = CoefficientSequence::new(Rule::InverseLog { offset: c(-3.0), scale: c(0.1) }, Some(c(-3.0)), DecayClass::VanishingOnly, None);
    let eq = PoincareEquation::new(vec![CoefficientSequence::constant(c(2.0)), a1, CoefficientSequence::constant(c(1.0))], 0)?;
    let profile = CharacteristicProfile::from_equation(&eq, DEFAULT_CLUSTER_TOL)?;
    let report = compute_filtration(&eq, &profile, &FiltrationConfig::default())?;
    let checks = verify_section5(&report, &eq, 0.1)?;
    for check in &checks.checks {
        println!("{}: ln Â = {:.4}", check.label, check.a_const);
    }
    for cc in &checks.corollary {
        println!("{}: ln C₃ = {:.4}, ln C₄ = {:.4}", cc.label, cc.ln_c3, cc.ln_c4);
    }
    println!("violations: {}", checks.violations.len());
    Ok(())
}
