//! Numerical laboratory for translating-soliton horizontal graphs.
//!
//! A graph `x1 = u(x2, x3)` translates by unit speed in the `e3` direction
//! exactly when
//!
//! ```text
//! Lu = Δu + ∂₃u = Σ u_ij u_i u_j / (1 + |∇u|²)
//! ```
//!
//! The crate bundles special functions, planar domains, closed-form model
//! solutions, a damped-Newton finite-difference solver, integral kernels for
//! the drift Laplacian, and the experiment battery built on top of them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod domains;
pub mod error;
pub mod experiments;
pub mod fdsolver;
pub mod kernels;
pub mod models;
pub mod quad;
pub mod specfun;

pub use domains::{DomainSpec, Point2, Rect};
pub use error::{Error, Result};
