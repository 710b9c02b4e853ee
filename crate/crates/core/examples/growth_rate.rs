//! Growth exponent of the Fibonacci numbers and of a perturbed recurrence.
use plab::envelope::{transfer_log_norm, Direction};
use plab::filtration::growth_exponent;
use plab::linalg::c;
use plab::{CoefficientSequence, DecayClass, PoincareEquation};

fn main() -> plab::Result<()> {
    let fib = PoincareEquation::constant(&[c(-1.0), c(-1.0)]);
    let traj = fib.solve(0, &[c(0.0), c(1.0)], 2048)?;
    let g = growth_exponent(&traj, 0.5)?;
    println!("fibonacci: estimate {:.6}, golden ratio {:.6}", g.estimate, (1.0 + 5f64.sqrt()) / 2.0);

    // y(ν+2) − (3 + 1/(ν+1)) y(ν+1) + 2 y(ν) = 0
    let a1 = CoefficientSequence::rational(vec![c(-4.0), c(-3.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu);
    let eq = PoincareEquation::new(vec![CoefficientSequence::constant(c(2.0)), a1, CoefficientSequence::constant(c(1.0))], 0)?;
    let traj = eq.solve(0, &[c(1.0), c(0.5)], 4096)?;
    println!("perturbed: estimate {:.6}", growth_exponent(&traj, 0.5)?.estimate);

    let product = transfer_log_norm(&eq, 1, 4097, Direction::Forward)?;
    println!("ln‖A(4096)···A(1)‖ / 4096 = {:.6}, ln 2 = {:.6}", product.per_step(), 2f64.ln());
    Ok(())
}
