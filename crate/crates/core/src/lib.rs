//! Numerical pseudo-Finsler geometry.
//!
//! Lagrangians `L(x, y)` are evaluated through nested forward-mode dual
//! numbers, which gives exact metric tensors, sprays and connections.
//! On top of that sit a fixed-step geodesic integrator, diagnostics for
//! conformal maps and vector fields, and a declarative experiment runner.

// Negated comparisons are used as NaN-rejecting guards.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod conformal;
pub mod error;
pub mod expr;
pub mod geodesics;
pub mod geometry;
pub mod runner;
pub mod zoo;

pub use error::{Error, ParseError, Result};
pub use nalgebra;

/// Library version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
