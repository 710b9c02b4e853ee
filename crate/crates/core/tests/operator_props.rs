mod common;

use common::{random_operator, rng};
use plab::linalg::c;
use plab::operator::{compose, divide_right, limit_operator_and_charpoly, DifferenceOperator, Samples};
use plab::spectral::poly_product;
use plab::C64;
use rand::Rng;

fn coeff_residual(x: &DifferenceOperator, y: &DifferenceOperator, nus: &[u64]) -> f64 {
    assert_eq!(x.degree(), y.degree());
    let mut worst: f64 = 0.0;
    for &nu in nus {
        for k in 0..=x.degree() {
            let (a, b) = (x.coeff(k, nu), y.coeff(k, nu));
            worst = worst.max((a - b).norm() / a.norm().max(b.norm()).max(1.0));
        }
    }
    worst
}

fn poly_residual(p: &[C64], q: &[C64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).norm() / a.norm().max(1.0)).fold(0.0, f64::max)
}

const NUS: [u64; 5] = [0, 1, 7, 50, 900];

#[test]
fn composition_is_associative() {
    let mut r = rng(11);
    for _ in 0..200 {
        let ops: Vec<_> = (0..3).map(|_| {
            let d = r.gen_range(0..=3);
            let monic = r.gen_bool(0.5);
            random_operator(&mut r, d, monic)
        }).collect();
        let left = compose(&compose(&ops[0], &ops[1]), &ops[2]);
        let right = compose(&ops[0], &compose(&ops[1], &ops[2]));
        assert!(coeff_residual(&left, &right, &NUS) < 1e-10);
    }
}

#[test]
fn degrees_add_and_charpolys_multiply() {
    let mut r = rng(12);
    for _ in 0..200 {
        let (d1, d2) = (r.gen_range(0..=3), r.gen_range(0..=3));
        let beta = random_operator(&mut r, d1, false);
        let gamma = random_operator(&mut r, d2, false);
        let bg = compose(&beta, &gamma);
        assert_eq!(bg.degree(), d1 + d2);
        let p = limit_operator_and_charpoly(&bg).unwrap().1;
        let expect = poly_product(&[limit_operator_and_charpoly(&beta).unwrap().1, limit_operator_and_charpoly(&gamma).unwrap().1]);
        assert!(poly_residual(&p, &expect) < 1e-10);
        let far = 1_000_000_000;
        let tail: Vec<C64> = (0..=bg.degree()).map(|k| bg.coeff(k, far)).collect();
        assert!(poly_residual(&tail, &p) < 1e-6);
    }
}

#[test]
fn right_division_round_trips() {
    let mut r = rng(13);
    for _ in 0..50 {
        let (dq, dp) = (r.gen_range(0..=2), r.gen_range(1..=2));
        let eta = random_operator(&mut r, dq, false);
        let beta = random_operator(&mut r, dp, true);
        let alpha = compose(&eta, &beta);
        let quotient = divide_right(&alpha, &beta).unwrap();
        assert!(coeff_residual(&quotient, &eta, &NUS) < 1e-10);
        assert!(coeff_residual(&compose(&quotient, &beta), &alpha, &NUS) < 1e-10);
    }
}

#[test]
fn forward_solutions_lie_in_the_kernel() {
    let mut r = rng(14);
    for _ in 0..20 {
        let d = r.gen_range(1..=3);
        let alpha = random_operator(&mut r, d, true);
        let eq = alpha.to_equation().unwrap();
        let mut values: Vec<C64> = (0..d).map(|_| common::cplx(&mut r)).collect();
        for nu in 0..30u64 {
            let next = -(0..d).map(|k| alpha.coeff(k, nu) * values[nu as usize + k]).sum::<C64>();
            values.push(next);
        }
        let y = Samples { start: 0, values };
        for nu in 0..30 {
            assert!(alpha.apply(&y, nu).unwrap().norm() < 1e-9 * (1.0 + y.values[nu as usize + d].norm()));
        }
        assert_eq!(eq.order(), d);
    }
    let nabla = DifferenceOperator::constant(&[c(0.0), c(1.0)]).unwrap();
    assert_eq!(compose(&nabla, &nabla).coeff(2, 3), c(1.0));
}
