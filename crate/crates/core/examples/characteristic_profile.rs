//! Roots, modulus clusters and multiplicities of a characteristic polynomial.
use plab::linalg::c;
use plab::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};
use plab::{PoincareEquation, C64};

fn main() -> plab::Result<()> {
    let roots = [c(2.0), c(-2.0), C64::new(0.0, 1.0), c(1.0), c(1.0), c(0.0)];
    let eq = PoincareEquation::from_roots(&roots);
    let profile = CharacteristicProfile::from_equation(&eq, DEFAULT_CLUSTER_TOL)?;
    println!("s = {}, k = {}, k* = {}", profile.s(), profile.k_global, profile.k_star());
    for theta in 1..=profile.s() {
        println!("  θ={theta}: ρ = {:.6}, e = {}, k = {}, slow dim = {}", profile.rho(theta), profile.e(theta), profile.k(theta), profile.slow_dim(theta));
    }
    for r in &profile.roots {
        println!("  root {:.6} (multiplicity {})", r.value, r.multiplicity);
    }
    Ok(())
}
