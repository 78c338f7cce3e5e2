//! Effective dynamics of a tracer particle coupled to an ideal Bose gas.
//!
//! * [`kernels`]: the coupling profile and the field-correlation kernels.
//! * [`memory_kernel`]: the propagator `K(t)` by Volterra stepping and by Fourier inversion.
//! * [`exponent_analysis`]: contraction integrals, the admissible decay interval, best-decay roots.
//! * [`dynamics`]: linearized, nonlinear and fixed-point solvers for the particle.

pub mod dynamics;
pub mod error;
pub mod exponent_analysis;
pub mod kernels;
pub mod memory_kernel;
pub mod volterra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
