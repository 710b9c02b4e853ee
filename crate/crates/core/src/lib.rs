//! Growth analysis of linear difference equations of Poincaré type.
//!
//! The crate is organized bottom-up:
//!
//! - [`equation`]: coefficient sequences, equations, companion matrices, solutions.
//! - [`spectral`]: characteristic polynomial, roots, modulus clusters.
//! - [`adapted`]: ε-adapted norms built from a numerical Jordan structure.
//! - [`envelope`]: summation bounds, dyadic schedules, log-scaled transfer
//!   products and growth envelopes with fitted constants.
//! - [`operator`]: the algebra of difference operators `Σ μ_{a_k} ∘ ∇^k`.
//! - [`factor`]: Perron factorization into modulus-graded factors.
//! - [`filtration`]: the modulus filtration of the solution space and the
//!   empirical growth checks built on it.
//! - [`report`]: the batch driver behind the `plab analyze` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapted;
pub mod cser;
pub mod envelope;
pub mod equation;
pub mod error;
pub mod factor;
pub mod filtration;
pub mod linalg;
pub mod operator;
pub mod report;
pub mod spectral;

pub use equation::{CoefficientSequence, DecayClass, PoincareEquation, SolutionTrajectory, StateVector, C64};
pub use error::{Error, Result};
