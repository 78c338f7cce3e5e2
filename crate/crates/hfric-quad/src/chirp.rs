use std::f64::consts::PI;

use num_complex::Complex64;

use crate::accel::EpsilonTable;
use crate::rules::{uniform_breaks, PanelRule};
use crate::spec::{QuadError, QuadResult, QuadratureSpec};

/// Tuning for [`chirp_integral`].
#[derive(Clone, Copy, Debug)]
pub struct ChirpOptions {
    /// Largest panel width in ρ; must resolve any oscillation of the weight itself.
    pub max_width: f64,
    /// Hard limit on the number of half-period panels.
    pub max_half_periods: usize,
    /// Number of half-periods summed before extrapolation is trusted.
    pub min_terms: usize,
    /// Extrapolation is not trusted before the panels reach this ρ, so that features of
    /// the envelope inside it are integrated rather than extrapolated over.
    pub extrapolate_from: f64,
}

impl Default for ChirpOptions {
    fn default() -> Self {
        Self { max_width: 0.5, max_half_periods: 400_000, min_terms: 14, extrapolate_from: 0.0 }
    }
}

/// `∫₀^∞ g(ρ) e^{−ibρ²} dρ` for a complex envelope `g`.
///
/// The range is cut at the half-periods `ρ_n = √(nπ/|b|)`. When `g` has decayed
/// below the target at the truncation radius the panel sum is truncated there;
/// otherwise the partial sums are extrapolated with the ε-algorithm.
pub fn chirp_integral(
    g: &mut dyn FnMut(f64) -> Complex64,
    b: f64,
    spec: &QuadratureSpec,
    opts: &ChirpOptions,
) -> Result<QuadResult<Complex64>, QuadError> {
    spec.validate()?;
    let radius = spec.radius;
    let decaying = envelope_decays(g, radius, spec.target);
    let rule = PanelRule::new(spec.nodes);
    let mut evals = 0usize;

    let mut integrand = |rho: f64| -> Complex64 {
        let ph = -b * rho * rho;
        g(rho) * Complex64::new(ph.cos(), ph.sin())
    };

    if b == 0.0 || (decaying && (PI / b.abs()).sqrt() >= radius) {
        if !decaying {
            return Err(QuadError::NonConvergence {
                estimate: f64::INFINITY,
                target: spec.target,
                context: "weight does not decay and there is no oscillation to exploit",
            });
        }
        let breaks = uniform_breaks(0.0, radius, opts.max_width);
        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        for w in breaks.windows(2) {
            let share = spec.target * 0.5 * (w[1] - w[0]) / radius;
            let (q, e) = rule.adaptive(&mut integrand, w[0], w[1], share, &mut evals)?;
            value += q;
            error += e;
        }
        return finish(value, error, evals, spec);
    }

    let half = PI / b.abs();
    let mut table = EpsilonTable::new(40);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut panel_error = 0.0;
    let mut recent: Vec<Complex64> = Vec::new();
    let mut lo = 0.0;
    for n in 1..=opts.max_half_periods {
        let mut hi = (n as f64 * half).sqrt();
        let last = decaying && hi >= radius;
        if last {
            hi = hi.max(lo);
        }
        let pieces = uniform_breaks(lo, hi, opts.max_width);
        let mut term = Complex64::new(0.0, 0.0);
        for w in pieces.windows(2) {
            let share = spec.target * 1e-3 * (w[1] - w[0]).min(1.0);
            let (q, e) = rule.adaptive(&mut integrand, w[0], w[1], share, &mut evals)?;
            term += q;
            panel_error += e;
        }
        sum += term;
        lo = hi;
        if last {
            return finish(sum, panel_error, evals, spec);
        }
        table.push(sum);
        if n >= opts.min_terms && lo >= opts.extrapolate_from {
            if let Some((est, _)) = table.estimate() {
                recent.push(est);
                if recent.len() > 4 {
                    recent.remove(0);
                }
                if recent.len() == 4 {
                    let spread = recent
                        .iter()
                        .map(|r| (r - est).norm())
                        .fold(0.0, f64::max);
                    if spread < 0.1 * spec.target {
                        return finish(est, panel_error + spread, evals, spec);
                    }
                }
            }
        }
    }
    Err(QuadError::NonConvergence {
        estimate: f64::INFINITY,
        target: spec.target,
        context: "half-period series did not settle",
    })
}

fn finish(
    value: Complex64,
    error: f64,
    evaluations: usize,
    spec: &QuadratureSpec,
) -> Result<QuadResult<Complex64>, QuadError> {
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(QuadError::NotFinite { at: f64::NAN });
    }
    if error > spec.target {
        return Err(QuadError::NonConvergence { estimate: error, target: spec.target, context: "chirp integral" });
    }
    Ok(QuadResult { value, error, evaluations })
}

fn envelope_decays(g: &mut dyn FnMut(f64) -> Complex64, radius: f64, target: f64) -> bool {
    let floor = 1e-6 * target;
    [1.0, 1.1, 1.25, 1.5, 2.0]
        .iter()
        .all(|s| g(radius * s).norm() * radius < floor)
}

/// `∫₀^∞ ρ^moment · weight(ρ) · e^{−aρ²} dρ` for `Re a ≥ 0`.
pub fn gauss_oscillatory(
    weight: &dyn Fn(f64) -> f64,
    a: Complex64,
    moment: u32,
    spec: &QuadratureSpec,
) -> Result<QuadResult<Complex64>, QuadError> {
    gauss_oscillatory_with(weight, a, moment, spec, &ChirpOptions::default())
}

pub fn gauss_oscillatory_with(
    weight: &dyn Fn(f64) -> f64,
    a: Complex64,
    moment: u32,
    spec: &QuadratureSpec,
    opts: &ChirpOptions,
) -> Result<QuadResult<Complex64>, QuadError> {
    if !(a.re >= 0.0) || !a.im.is_finite() {
        return Err(QuadError::InvalidArgument(format!("Re a must be >= 0, got a = {a}")));
    }
    let mut g = |rho: f64| {
        let v = rho.powi(moment as i32) * weight(rho) * (-a.re * rho * rho).exp();
        Complex64::new(v, 0.0)
    };
    chirp_integral(&mut g, a.im, spec, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moment_real_parameter() {
        let w = |r: f64| (-r * r).exp();
        let q = gauss_oscillatory(&w, Complex64::new(0.0, 0.0), 2, &QuadratureSpec::default()).unwrap();
        assert!((q.value.re - PI.sqrt() / 4.0).abs() < 1e-12);
        assert_eq!(q.value.im, 0.0);
    }
}
