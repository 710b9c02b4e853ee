//! Fitted poly-log envelopes for the solutions of a perturbed equation.
use plab::envelope::{fit_envelope, EnvelopeMode, EnvelopeShape, Side};
use plab::linalg::c;
use plab::spectral::{CharacteristicProfile, DEFAULT_CLUSTER_TOL};
use plab::{CoefficientSequence, DecayClass, PoincareEquation};

fn main() -> plab::Result<()> {
    // (z − 1)² with a 1/(ν+1) correction in the constant term
    let a0 = CoefficientSequence::rational(vec![c(2.0), c(1.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu);
    let eq = PoincareEquation::new(vec![a0, CoefficientSequence::constant(c(-2.0)), CoefficientSequence::constant(c(1.0))], 0)?;
    let profile = CharacteristicProfile::from_equation(&eq, DEFAULT_CLUSTER_TOL)?;
    let traj = eq.solve(1, &[c(1.0), c(1.0)], 2000)?;
    let base = traj.ln_window_norm(1, 2)?;
    let series: Vec<_> = (2..1990).map(|nu| Ok((nu, traj.ln_window_norm(nu, 2)? - base))).collect::<plab::Result<_>>()?;
    let shape = EnvelopeShape { rho: profile.rho(1), k: profile.k(1), mode: EnvelopeMode::PolyLog };
    let env = fit_envelope(&series, shape, Side::Upper)?;
    println!("ρ = {}, k = {}, fitted A = {:.4}", shape.rho, shape.k, env.a_const);
    for nu in [10, 100, 1000, 1989] {
        println!("  ν = {nu:4}: ln ω(ν)/ω(1) = {:8.4}, envelope {:8.4}", series[(nu - 2) as usize].1, env.ln_value(nu));
    }
    Ok(())
}
