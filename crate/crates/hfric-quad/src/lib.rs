//! Quadrature primitives shared by every kernel and solver in the workspace.
//!
//! Integrals of the form `∫₀^∞ g(ρ) e^{−ibρ²} dρ` are split at the half-periods
//! of the chirp and summed with Wynn's ε-acceleration when the envelope decays
//! slowly. Principal values are computed by symmetric pairing around the pole.

mod accel;
mod chirp;
mod erf;
mod fourier;
mod pv;
mod rules;
mod spec;
mod tanh_sinh;

pub use accel::EpsilonTable;
pub use chirp::{chirp_integral, gauss_oscillatory, gauss_oscillatory_with, ChirpOptions};
pub use erf::{complex_erf, erf_series};
pub use fourier::{causal_inversion, fourier_inversion};
pub use pv::{pv_pole_integral, regular_shifted_integral};
pub use rules::{gauss_legendre, integrate_panels, GaussLegendre, Scalar};
pub use spec::{QuadError, QuadResult, QuadratureSpec, RuleKind};
pub use tanh_sinh::tanh_sinh;

pub use num_complex::Complex64;
