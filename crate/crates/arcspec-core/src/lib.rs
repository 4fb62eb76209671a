//! Discrete spectrum of a 3D Schrodinger operator with an attractive
//! singular interaction supported by a finite open arc.
//!
//! The crate discretizes the regularized Birman-Schwinger operator of the
//! resolvent kernel on the arc, solves the spectral condition mu_j(kappa) =
//! alpha for the bound-state decay rates, and compares the result against
//! the strong-coupling expansion driven by the Dirichlet comparison
//! operator S = -d^2/ds^2 - gamma^2/4 on the arc.
//!
//! The crate is no_std with alloc; all IO lives in the companion CLI crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod bs;
pub mod curve;
mod error;
pub mod linalg;
pub mod math;
pub mod operator1d;
pub mod quadrature;

pub use error::{Error, Result};
