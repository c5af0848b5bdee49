//! Bound-state solvers for the non-relativistic Schrödinger and relativistic
//! Dirac equations, built on a parameterized family of compact integral
//! operators: the bound-state Helmholtz Green's function turns the eigenvalue
//! problem into repeated applications of a smoothing convolution, power
//! iteration finds the dominant auxiliary eigenvalue, and Newton updates of
//! the Green's-function parameter steer it to 1, where the auxiliary
//! eigenfunction solves the original equation.
//!
//! The crate also carries the analytic cross-checks used to validate the
//! machinery: certified Gaussian-sum kernels, Hilbert-Schmidt norms in closed
//! form and by quadrature, momentum-space operator bounds, and a dense radial
//! discretization serving as an independent oracle for the 3D solver.

pub mod constants;
pub mod error;
pub mod kernel;
pub mod special;

pub mod grid;
pub mod fft;
pub mod field;
pub mod potential;

pub mod schrodinger;
pub mod dirac;
pub mod spectral;

pub use constants::PhysicalConstants;
pub use error::{CoreError, Result};
