//! Composition, characteristic polynomials and right division of difference operators.
use plab::linalg::c;
use plab::operator::{compose, divide_right, limit_operator_and_charpoly, DifferenceOperator};
use plab::{CoefficientSequence, DecayClass, C64};

fn main() -> plab::Result<()> {
    let slow = DifferenceOperator::shift_minus(c(1.0));
    let fast = DifferenceOperator::new(
        vec![CoefficientSequence::rational(vec![c(-1.0), c(-2.0)], vec![c(1.0), c(1.0)], DecayClass::InverseNu), CoefficientSequence::constant(c(1.0))],
        0,
    )?;
    let alpha = compose(&slow, &fast);
    println!("degree {}", alpha.degree());
    for nu in [0, 10, 1000] {
        println!("  ν = {nu}: {}", show(&(0..=2).map(|k| alpha.coeff(k, nu)).collect::<Vec<_>>()));
    }
    println!("P(α, z) = {}", show(&limit_operator_and_charpoly(&alpha)?.1));
    let quotient = divide_right(&alpha, &fast)?;
    println!("α / β = {} at ν = 5", show(&(0..=1).map(|k| quotient.coeff(k, 5)).collect::<Vec<_>>()));
    Ok(())
}

fn show(values: &[C64]) -> String {
    let parts: Vec<String> = values.iter().map(|z| if z.im.abs() < 1e-12 { format!("{:.6}", z.re) } else { format!("{:.6}", z) }).collect();
    format!("[{}]", parts.join(", "))
}
