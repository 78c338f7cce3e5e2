//! The time kernels `M`, `V` and the resolvent boundary value `G(k+i0)`.

use std::f64::consts::PI;

use hfric_quad::{pv_pole_integral, regular_shifted_integral, Complex64, QuadratureSpec};

use super::potential::RadialPotential;
use super::radial::{moment, RadialWeight};
use crate::error::{Error, Result};

/// Relative accuracy requested from moment integrals.
pub const MOMENT_REL: f64 = 1e-12;

/// `M_c(t) = ⟨W, e^{iΔt/2} W⟩ = 4π m₂(t)` (complex).
pub fn eval_m_c(pot: &RadialPotential, t: f64) -> Result<Complex64> {
    let w = RadialWeight::w_sq(pot);
    Ok(moment(&w, 1, t, MOMENT_REL)? * (4.0 * PI))
}

/// `M(t) = 4π ∫ ρ² cos(ρ²t/2) |Ŵ|² dρ`.
pub fn eval_m(pot: &RadialPotential, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("M needs t >= 0, got {t}")));
    }
    Ok(eval_m_c(pot, t)?.re)
}

/// `V_c(t) = −8πi (m₀(0) − m₀(t))`, whose real part is `V`.
pub fn eval_v_c(pot: &RadialPotential, t: f64) -> Result<Complex64> {
    let w = RadialWeight::w_sq(pot);
    let m0 = moment(&w, 0, 0.0, MOMENT_REL)?;
    let mt = moment(&w, 0, t, MOMENT_REL)?;
    Ok((m0 - mt) * Complex64::new(0.0, -8.0 * PI))
}

/// `V(t) = 8π ∫ sin(ρ²t/2) |Ŵ|² dρ`.
pub fn eval_v(pot: &RadialPotential, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("V needs t > 0, got {t}")));
    }
    Ok(eval_v_c(pot, t)?.re)
}

/// `G(k+i0) = i8πk [∫(ρ²+2k+i0)^{−1}|Ŵ|² + ∫(ρ²−2k−i0)^{−1}|Ŵ|²]`.
pub fn eval_g(pot: &RadialPotential, k: f64) -> Result<Complex64> {
    eval_g_with(pot, k, &QuadratureSpec::with_target(1e-11))
}

pub fn eval_g_with(pot: &RadialPotential, k: f64, spec: &QuadratureSpec) -> Result<Complex64> {
    if !(k.abs() >= 1e-12) || !k.is_finite() {
        return Err(Error::OutOfRange(format!("G(k) needs |k| >= 1e-12, got {k}")));
    }
    if pot.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let spec = QuadratureSpec { radius: pot.cutoff(), ..*spec };
    let f = |r: f64| pot.w_hat_sq(r);
    let p = 2.0 * k.abs();
    let regular = regular_shifted_integral(&f, p, &spec)?.value;
    // k > 0: the pole sits in (ρ² − 2k − i0); k < 0: in (ρ² + 2k + i0) = (ρ² − 2|k| + i0)
    let sign = if k > 0.0 { 1 } else { -1 };
    let resonant = pv_pole_integral(&f, p, sign, &spec)?.value;
    Ok((resonant + regular) * Complex64::new(0.0, 8.0 * PI * k))
}

/// Leading small-`k` coefficient: `G(k)/√|k| → 2^{3/2}(±i − 1)π²`.
pub fn g_small_k_limit(k: f64) -> Complex64 {
    let s = if k > 0.0 { 1.0 } else { -1.0 };
    Complex64::new(-1.0, s) * (2f64.powf(1.5) * PI * PI)
}

/// Asymptotic constants: `t^{3/2} M → −2π^{3/2}` and `t^{1/2} V → 4π^{3/2}` (for `Ŵ(0) = 1`).
pub const M_TAIL: f64 = -2.0 * 5.568_327_996_831_708;
pub const V_TAIL: f64 = 4.0 * 5.568_327_996_831_708;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_constants() {
        assert!((M_TAIL + 2.0 * PI.powf(1.5)).abs() < 1e-14);
        assert!((V_TAIL - 4.0 * PI.powf(1.5)).abs() < 1e-13);
    }

    #[test]
    fn zero_potential_gives_zero() {
        let p = RadialPotential::default().scaled(0.0);
        assert_eq!(eval_m(&p, 3.0).unwrap(), 0.0);
        assert_eq!(eval_g(&p, 0.3).unwrap(), Complex64::new(0.0, 0.0));
    }
}
