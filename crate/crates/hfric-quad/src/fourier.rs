use std::f64::consts::PI;

use num_complex::Complex64;

use crate::chirp::{chirp_integral, ChirpOptions};
use crate::spec::{QuadError, QuadResult, QuadratureSpec};

/// `−(1/π) ∫_ℝ Re[S(k)] cos(kt) dk` for `t > 0`.
///
/// Both half-lines are mapped with `k = ±ρ²`, which turns a `|k|^{−1/2}` cusp at
/// the origin into a bounded envelope and `cos(kt)` into the chirp `e^{−itρ²}`.
/// Resonances inside `spec.radius` are integrated panel by panel; the half-period
/// series is only extrapolated beyond it.
pub fn fourier_inversion(
    spectrum: &dyn Fn(f64) -> Complex64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, QuadError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(QuadError::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    let mut g = |rho: f64| {
        let k = rho * rho;
        Complex64::new(2.0 * rho * (spectrum(k).re + spectrum(-k).re), 0.0)
    };
    let opts = ChirpOptions { max_width: max_width_for(t), extrapolate_from: spec.radius, ..ChirpOptions::default() };
    let q = chirp_integral(&mut g, t, spec, &opts)?;
    Ok(QuadResult { value: -q.value.re / PI, error: q.error / PI, evaluations: q.evaluations })
}

/// The full transform `−(1/2π) ∫_ℝ S(k) e^{−ikt} dk` for any real `t ≠ 0`,
/// including the odd part of the spectrum. For a causal kernel this vanishes
/// at `t < 0` and equals [`fourier_inversion`] at `t > 0`.
pub fn causal_inversion(
    spectrum: &dyn Fn(f64) -> Complex64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, QuadError> {
    if t == 0.0 || !t.is_finite() {
        return Err(QuadError::InvalidArgument(format!("t must be finite and nonzero, got {t}")));
    }
    let opts = ChirpOptions { max_width: max_width_for(t.abs()), extrapolate_from: spec.radius, ..ChirpOptions::default() };
    let half = QuadratureSpec { target: 0.5 * spec.target, ..*spec };
    let mut pos = |rho: f64| spectrum(rho * rho) * (2.0 * rho);
    let mut neg = |rho: f64| spectrum(-rho * rho) * (2.0 * rho);
    let qp = chirp_integral(&mut pos, t, &half, &opts)?;
    let qn = chirp_integral(&mut neg, -t, &half, &opts)?;
    let v = -(qp.value + qn.value) / (2.0 * PI);
    Ok(QuadResult {
        value: v.re,
        error: (qp.error + qn.error) / (2.0 * PI),
        evaluations: qp.evaluations + qn.evaluations,
    })
}

fn max_width_for(t: f64) -> f64 {
    // keep a few panels per unit of k near the origin even when t is small
    if t < 1.0 {
        0.25
    } else {
        0.5
    }
}
