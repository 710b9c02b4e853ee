//! A norm in which a Jordan block is almost a contraction by its spectral radius.
use plab::adapted::build_adapted_norm;
use plab::linalg::{c, h_op, CMatrix, CVector};

fn main() -> plab::Result<()> {
    let a = CMatrix::from_row_slice(3, 3, &[c(0.5), c(1.0), c(0.0), c(0.0), c(0.5), c(1.0), c(0.0), c(0.0), c(0.5)]);
    println!("max row sum of A: {:.4}", h_op(&a));
    for eps in [0.5, 0.1, 0.01] {
        let norm = build_adapted_norm(&a, eps)?;
        println!("ε = {eps}: induced norm {:.6}, spectral radius {:.4}, k = {}", norm.induced_norm, norm.spectral_radius, norm.jordan_block_max);
        let x = CVector::from_vec(vec![c(1.0), c(-1.0), c(2.0)]);
        let (upper, lower) = norm.vector_bounds(&x);
        println!("  p(x) = {:.4} within [{:.4}, {:.4}]", norm.eval(&x), lower, upper);
    }
    Ok(())
}
