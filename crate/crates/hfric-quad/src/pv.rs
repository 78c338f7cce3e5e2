use std::f64::consts::PI;

use num_complex::Complex64;

use crate::rules::{graded_breaks, integrate_panels, uniform_breaks};
use crate::spec::{QuadError, QuadResult, QuadratureSpec};

/// `∫₀^∞ f(ρ) / (ρ² − p ∓ i0) dρ` with `p = pole_sq > 0`; `sign = +1` selects
/// `−i0` (half-residue `+iπ f(√p)/(2√p)`), `sign = −1` selects `+i0`.
///
/// Writing `1/(ρ²−p) = φ(ρ)/(ρ−ρ₀)` with `φ = f/(ρ+ρ₀)`, the principal value on
/// `[0, 2ρ₀]` is folded into `∫₀^{ρ₀} [φ(ρ₀+u) − φ(ρ₀−u)]/u du`, whose integrand
/// is smooth; the remainder is a regular integral.
pub fn pv_pole_integral(
    f: &dyn Fn(f64) -> f64,
    pole_sq: f64,
    sign: i32,
    spec: &QuadratureSpec,
) -> Result<QuadResult<Complex64>, QuadError> {
    spec.validate()?;
    if !(pole_sq > 0.0) || !pole_sq.is_finite() {
        return Err(QuadError::InvalidArgument(format!("pole_sq must be > 0, got {pole_sq}")));
    }
    if sign != 1 && sign != -1 {
        return Err(QuadError::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let r0 = pole_sq.sqrt();
    let f0 = f(r0);
    if !f0.is_finite() {
        return Err(QuadError::NotFinite { at: r0 });
    }
    let upper = spec.radius.max(2.0 * r0);
    if f(upper).abs() > spec.target {
        return Err(QuadError::OutOfRange(format!(
            "pole at rho = {r0} too close to the truncation boundary {upper}: integrand not negligible there"
        )));
    }
    let phi = |rho: f64| f(rho) / (rho + r0);
    let half = QuadratureSpec { target: 0.5 * spec.target, ..*spec };

    let mut paired = |u: f64| (phi(r0 + u) - phi(r0 - u)) / u;
    let inner = integrate_panels(&mut paired, &uniform_breaks(0.0, r0, 0.5), &half)?;

    let mut outer_f = |rho: f64| phi(rho) / (rho - r0);
    let outer = if upper > 2.0 * r0 {
        integrate_panels(&mut outer_f, &graded_breaks(2.0 * r0, upper, r0, 0.5), &half)?
    } else {
        QuadResult { value: 0.0, error: 0.0, evaluations: 0 }
    };

    let residue = sign as f64 * PI * f0 / (2.0 * r0);
    Ok(QuadResult {
        value: Complex64::new(inner.value + outer.value, residue),
        error: inner.error + outer.error,
        evaluations: inner.evaluations + outer.evaluations + 2,
    })
}

/// `∫₀^∞ f(ρ) / (ρ² + p) dρ` for `p > 0`, graded toward the origin on the scale `√p`.
pub fn regular_shifted_integral(
    f: &dyn Fn(f64) -> f64,
    shift: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, QuadError> {
    spec.validate()?;
    if !(shift > 0.0) {
        return Err(QuadError::InvalidArgument(format!("shift must be > 0, got {shift}")));
    }
    let scale = shift.sqrt();
    let mut g = |rho: f64| f(rho) / (rho * rho + shift);
    integrate_panels(&mut g, &graded_breaks(0.0, spec.radius, 0.25 * scale, 0.5), spec)
}
