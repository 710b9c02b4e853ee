//! Planted Jordan forms under random similarity: comparison inequalities,
//! operator-norm bracket, simple-spectrum equality and the inverse bound.

mod common;

use plab::adapted::build_adapted_norm;
use plab::linalg::{c, CMatrix};
use proptest::prelude::*;

#[test]
fn planted_jordan_suite() {
    let violations = common::planted_jordan_violations(0x5eed);
    assert!(violations.is_empty(), "{} violations:\n{}", violations.len(), violations.join("\n"));
}

proptest! {
    #[test]
    fn single_block_norm_is_modulus_plus_epsilon(re in -3.0f64..3.0, im in -3.0f64..3.0, size in 2usize..5, eps in 0.01f64..2.0) {
        let lambda = plab::C64::new(re, im);
        prop_assume!(lambda.norm() > 0.1);
        let a = CMatrix::from_fn(size, size, |i, j| if i == j { lambda } else if j == i + 1 { c(1.0) } else { c(0.0) });
        let norm = build_adapted_norm(&a, eps).unwrap();
        prop_assert!((norm.induced_norm - (lambda.norm() + eps)).abs() < 1e-9 * (1.0 + lambda.norm()));
    }
}
