//! The displacement kernel `Ψ(τ, r) = 4π ∫ |Ŵ|² j₀(ρr) e^{−iρ²τ/2} dρ` and its
//! radial derivatives.
//!
//! With `a = ∂_rΨ / r` and `b = (∂²_rΨ − a) / r²` the Hessian in the displacement
//! vector `Y` is `a·I + b·Y Yᵀ`, which has no `1/r` terms to cancel at the origin.

use hfric_quad::Complex64;

use super::correlation::MOMENT_REL;
use super::potential::RadialPotential;
use super::radial::{moments, radial_quadrature, RadialKind, RadialSeries, RadialWeight};
use crate::error::Result;

pub type Vec3 = [f64; 3];

/// Largest `|z|² = r²/(4|λ + iτ/2|)` handled by the power series.
const SERIES_Z2_MAX: f64 = 4.0;

fn z_squared(weight: &RadialWeight, tau: f64, r: f64) -> f64 {
    let alpha = Complex64::new(weight.lambda(), 0.5 * tau);
    r * r / (4.0 * alpha.norm())
}

/// Number of series terms that resolve `|z|² ≤ z2` to round-off.
fn terms_for(z2: f64) -> usize {
    let mut term = 1.0f64;
    let mut n = 0usize;
    while n < 6 || term > 1e-18 {
        n += 1;
        term *= z2.max(1e-3) / n as f64;
        if n > 80 {
            break;
        }
    }
    n + 4
}

/// The series of one displacement kernel at fixed `τ`, valid for `r ≤ r_max`.
#[derive(Clone, Debug)]
pub struct DisplacementSeries {
    tau: f64,
    r_max: f64,
    series: RadialSeries,
    re_a: Vec<f64>,
    re_b: Vec<f64>,
}

impl DisplacementSeries {
    /// Series for `Ψ` of `|Ŵ|²`.
    pub fn new(pot: &RadialPotential, tau: f64, r_max: f64) -> Result<Self> {
        Self::for_weight(&RadialWeight::w_sq(pot), 0, tau, r_max)
    }

    /// Series for the transform of `ρ^{2·shift} g`.
    pub fn for_weight(weight: &RadialWeight, shift: usize, tau: f64, r_max: f64) -> Result<Self> {
        let z2 = z_squared(weight, tau, r_max).min(SERIES_Z2_MAX);
        let count = terms_for(z2);
        let m = moments(weight, count + shift, tau, MOMENT_REL)?;
        let series = RadialSeries::from_moments(&m[shift..]);
        let re_a = series.a_coefficients().iter().map(|c| c.re).collect();
        let re_b = series.b_coefficients().iter().map(|c| c.re).collect();
        let r_lim = (SERIES_Z2_MAX * 4.0 * Complex64::new(weight.lambda(), 0.5 * tau).norm()).sqrt();
        Ok(Self { tau, r_max: r_max.min(r_lim), series, re_a, re_b })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Largest `r` for which the series is accurate.
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Real parts of the `a` and `b` coefficients in powers of `r²`.
    pub fn re_coefficients(&self) -> (&[f64], &[f64]) {
        (&self.re_a, &self.re_b)
    }

    pub fn series(&self) -> &RadialSeries {
        &self.series
    }

    /// `(Re a, Re b)` at `s = r²`.
    #[inline]
    pub fn re_ab(&self, s: f64) -> (f64, f64) {
        let (da, b) = self.re_ab_delta(s);
        (self.re_a[0] + da, b)
    }

    /// `(Re a(s) − Re a(0), Re b(s))`, summed upward and stopped once two successive
    /// terms are below round-off.
    #[inline]
    pub fn re_ab_delta(&self, s: f64) -> (f64, f64) {
        let len = self.re_a.len().max(self.re_b.len());
        let mut da = 0.0;
        let mut b = self.re_b.first().copied().unwrap_or(0.0);
        let mut pw = 1.0;
        let mut quiet = 0;
        for n in 1..len {
            pw *= s;
            let ta = self.re_a.get(n).copied().unwrap_or(0.0) * pw;
            let tb = self.re_b.get(n).copied().unwrap_or(0.0) * pw;
            da += ta;
            b += tb;
            if ta.abs() <= 1e-17 * da.abs() && tb.abs() <= 1e-17 * b.abs() {
                quiet += 1;
                if quiet == 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        (da, b)
    }

    #[inline]
    pub fn re_a(&self, s: f64) -> f64 {
        let mut a = 0.0;
        for c in self.re_a.iter().rev() {
            a = a * s + c;
        }
        a
    }
}

/// `(a, b)` for the weight at `(τ, r)`, by series or by direct quadrature.
pub fn eval_ab_weight(weight: &RadialWeight, shift: u32, tau: f64, r: f64) -> Result<(Complex64, Complex64)> {
    if z_squared(weight, tau, r) <= SERIES_Z2_MAX {
        let s = DisplacementSeries::for_weight(weight, shift as usize, tau, r)?;
        let x = r * r;
        return Ok((s.series.a(x), s.series.b(x)));
    }
    let a = radial_quadrature(weight, RadialKind::A, shift, tau, r, 1e-11)?;
    let b = radial_quadrature(weight, RadialKind::B, shift, tau, r, 1e-11)?;
    Ok((a, b))
}

/// `(a, b)` of `Ψ` at `(τ, r)`.
pub fn eval_ab(pot: &RadialPotential, tau: f64, r: f64) -> Result<(Complex64, Complex64)> {
    eval_ab_weight(&RadialWeight::w_sq(pot), 0, tau, r)
}

/// `(Ψ, ∂_rΨ, ∂²_rΨ)` at `(τ, r)`.
pub fn eval_psi(pot: &RadialPotential, tau: f64, r: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let weight = RadialWeight::w_sq(pot);
    let (psi, a, b) = if z_squared(&weight, tau, r) <= SERIES_Z2_MAX {
        let s = DisplacementSeries::for_weight(&weight, 0, tau, r)?;
        let x = r * r;
        (s.series.psi(x), s.series.a(x), s.series.b(x))
    } else {
        (
            radial_quadrature(&weight, RadialKind::Psi, 0, tau, r, 1e-11)?,
            radial_quadrature(&weight, RadialKind::A, 0, tau, r, 1e-11)?,
            radial_quadrature(&weight, RadialKind::B, 0, tau, r, 1e-11)?,
        )
    };
    Ok((psi, a * r, a + b * (r * r)))
}

fn norm(y: &Vec3) -> f64 {
    (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt()
}

/// `Re[(Y/r) ∂_rΨ] = Re[a]·Y`.
pub fn grad_kernel(pot: &RadialPotential, tau: f64, y: Vec3) -> Result<Vec3> {
    let (a, _) = eval_ab(pot, tau, norm(&y))?;
    Ok([a.re * y[0], a.re * y[1], a.re * y[2]])
}

/// `Re[H(τ, Y)]·P = Re[a]·P + Re[b]·(Y·P)·Y`.
pub fn hess_apply(pot: &RadialPotential, tau: f64, y: Vec3, p: Vec3) -> Result<Vec3> {
    let (a, b) = eval_ab(pot, tau, norm(&y))?;
    let yp = y[0] * p[0] + y[1] * p[1] + y[2] * p[2];
    Ok(std::array::from_fn(|i| a.re * p[i] + b.re * yp * y[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_term_count_grows_with_z() {
        assert!(terms_for(0.01) < terms_for(1.0));
        assert!(terms_for(4.0) <= 85);
    }

    #[test]
    fn gradient_vanishes_at_origin() {
        let g = grad_kernel(&RadialPotential::default(), 1.3, [0.0; 3]).unwrap();
        assert_eq!(g, [0.0; 3]);
    }
}
