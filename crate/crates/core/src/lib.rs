//! Quantitative Korovkin-type bounds for weakly nonlinear monotone operators,
//! checked numerically on grid-sampled function spaces.
//!
//! - [`function_space`]: sampled domains and functions, sup-norm, modulus of continuity.
//! - [`operators`]: Bernstein-type families, composition, Yosida-Kakutani, axiom checkers.
//! - [`bounds`]: the quantitative estimate, its ingredients and convergence sweeps.
//! - [`harness`]: config-driven experiment runs, CSV tables and manifests.

pub mod bounds;
pub mod error;
pub mod function_space;
pub mod harness;
pub mod operators;

pub use error::{Error, Result};
