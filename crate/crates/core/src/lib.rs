//! Numerical laboratory for weighted Hardy-Steklov operators
//! `f ↦ w(x) ∫_{a(x)}^{b(x)} f(y) v(y) dy` on the half-line.

pub mod config;
pub mod error;
pub mod float;
pub mod fairway;
pub mod functionals;
pub mod functions;
pub mod grids;
pub mod operator;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod roots;
pub mod runner;

pub use error::{Error, Result};
