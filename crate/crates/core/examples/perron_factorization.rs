//! Splitting an equation into first-order factors, fastest root first.
use plab::factor::{factorize, DEFAULT_FACTOR_HORIZON};
use plab::linalg::c;
use plab::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};
use plab::{CoefficientSequence, DecayClass, PoincareEquation, C64};

fn main() -> plab::Result<()> {
    let a1 = CoefficientSequence::rational(vec![c(-2.0), c(-3.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu);
    let eq = PoincareEquation::new(vec![CoefficientSequence::constant(c(2.0)), a1, CoefficientSequence::constant(c(1.0))], 0)?;
    let profile = CharacteristicProfile::from_equation(&eq, DEFAULT_CLUSTER_TOL)?;
    let f = factorize(&eq, &profile, DEFAULT_FACTOR_HORIZON)?;
    println!("working offset {}, composition residual {:.2e}", f.working_offset, f.residual);
    for s in &f.summaries {
        println!("θ={} degree {}: limits {}, target {}", s.theta, s.degree, show(&s.limits), show(&s.target));
        if let Some(fit) = s.decay_fit {
            println!("  ν|b − L| ≤ {fit:.4}");
        }
    }
    Ok(())
}

fn show(values: &[C64]) -> String {
    let parts: Vec<String> = values.iter().map(|z| if z.im.abs() < 1e-12 { format!("{:.6}", z.re) } else { format!("{:.6}", z) }).collect();
    format!("[{}]", parts.join(", "))
}
