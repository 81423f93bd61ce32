//! Hammerstein integral equations on `[0, 1]` with nonlocal boundary
//! functionals of Riemann–Stieltjes type.
//!
//! The crate is organized bottom-up:
//!
//! * [`bvfun`]: bounded-variation functions, grid functions and `Ω₀` domains;
//! * [`stieltjes`]: Riemann–Stieltjes integrals and the functionals they induce;
//! * [`kernels`]: Green's functions and bounding-function constructions;
//! * [`operators`]: the Hammerstein operator `F₂`, the rank-two perturbation
//!   `F₁` and the constants of the existence theorems;
//! * [`solvers`]: fixed-point and eigenpair iterations plus hypothesis checks;
//! * [`bvp`]: reductions from boundary value problems and the worked catalog.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bvfun;
pub mod bvp;
pub mod stieltjes;
pub mod verdict;
pub mod error;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
