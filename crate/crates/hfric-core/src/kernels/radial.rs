//! Radial reduction of the plane-wave pairings.
//!
//! Every kernel reduces to `∫₀^∞ ρ^{2n} g(ρ) e^{−iρ²τ/2} dρ` for a radial weight
//! `g`, possibly against a spherical Bessel factor in `ρr`. Expanding the Bessel
//! factor in `s = r²` turns the displacement kernels into power series whose
//! coefficients are these moments.

use std::f64::consts::PI;

use hfric_quad::{
    chirp_integral, gauss_legendre, gauss_oscillatory_with, ChirpOptions, Complex64, QuadratureSpec,
};

use super::potential::RadialPotential;
use crate::error::Result;

/// A radial weight `g(ρ)` built from the coupling profile.
#[derive(Clone, Debug)]
pub struct RadialWeight {
    pot: RadialPotential,
    /// `None`: `|Ŵ|²`; `Some(w)`: `Ŵ(ρ)·e^{−w²ρ²/2}` (pairing with a Gaussian wave packet).
    packet: Option<f64>,
    /// Gaussian rate `λ` (exact for Gaussian profiles, moment-matched otherwise).
    lambda: f64,
}

impl RadialWeight {
    pub fn w_sq(pot: &RadialPotential) -> Self {
        Self::build(pot, None)
    }

    pub fn w_times_packet(pot: &RadialPotential, width: f64) -> Self {
        Self::build(pot, Some(width))
    }

    fn build(pot: &RadialPotential, packet: Option<f64>) -> Self {
        let mut me = Self { pot: pot.clone(), packet, lambda: 1.0 };
        me.lambda = match me.gaussian_form() {
            Some((_, l)) => l,
            None => {
                // match the first two moments of a Gaussian: λ = m₀ / (2 m₂)
                let m0 = me.static_moment(0);
                let m2 = me.static_moment(1);
                if m2 > 0.0 {
                    m0 / (2.0 * m2)
                } else {
                    1.0
                }
            }
        };
        me
    }

    pub fn value(&self, rho: f64) -> f64 {
        match self.packet {
            None => self.pot.w_hat_sq(rho),
            Some(w) => self.pot.w_hat(rho) * (-0.5 * w * w * rho * rho).exp(),
        }
    }

    /// `(amplitude, λ)` when the weight is exactly `amplitude·e^{−λρ²}`.
    pub fn gaussian_form(&self) -> Option<(f64, f64)> {
        let sigma = self.pot.gaussian_sigma()?;
        let a = self.pot.amplitude();
        let s2 = sigma * sigma;
        Some(match self.packet {
            None => (a * a, s2),
            Some(w) => (a, 0.5 * (s2 + w * w)),
        })
    }

    /// Effective Gaussian rate, used for branch thresholds and tolerance scaling.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_zero(&self) -> bool {
        self.pot.is_zero()
    }

    fn cutoff(&self, n: u32) -> f64 {
        match self.gaussian_form() {
            Some((_, l)) => ((n as f64).sqrt() + 10.0) / l.sqrt(),
            None => self.pot.cutoff(),
        }
    }

    /// Size of `∫ρ^{2n}|g|` for a Gaussian of the same rate; sets relative targets.
    fn moment_scale(&self, n: u32) -> f64 {
        let l = self.lambda;
        let amp = self.gaussian_form().map_or(1.0, |(a, _)| a.abs()).max(1e-300);
        amp * libm::tgamma(n as f64 + 0.5) / (2.0 * l.powf(n as f64 + 0.5))
    }

    fn static_moment(&self, n: u32) -> f64 {
        let spec = QuadratureSpec { target: 1e-12, radius: self.cutoff(n), ..QuadratureSpec::default() };
        let w = |r: f64| self.value(r);
        gauss_oscillatory_with(&w, Complex64::new(0.0, 0.0), 2 * n, &spec, &ChirpOptions::default())
            .map(|q| q.value.re)
            .unwrap_or(0.0)
    }
}

/// `τ` beyond which entire Gaussian weights use the inverse-power series.
const SERIES_TAU_FACTOR: f64 = 16.0;

/// `m_{2n}(τ) = ∫₀^∞ ρ^{2n} g(ρ) e^{−iρ²τ/2} dρ` to relative accuracy `rel`.
pub fn moment(weight: &RadialWeight, n: u32, tau: f64, rel: f64) -> Result<Complex64> {
    if weight.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if let Some((amp, lambda)) = weight.gaussian_form() {
        if tau.abs() >= SERIES_TAU_FACTOR * lambda {
            return Ok(inverse_power_series(amp, lambda, n, tau));
        }
    }
    let scale = weight.moment_scale(n);
    let spec = QuadratureSpec { target: rel * scale, radius: weight.cutoff(n), ..QuadratureSpec::default() };
    let opts = ChirpOptions { max_width: 0.5f64.min(0.5 / weight.lambda.sqrt()), ..ChirpOptions::default() };
    let w = |r: f64| weight.value(r);
    let q = gauss_oscillatory_with(&w, Complex64::new(0.0, 0.5 * tau), 2 * n, &spec, &opts)?;
    Ok(q.value)
}

/// Panel budget for [`moments`]' shared-node path.
const SHARED_PANELS_MAX: usize = 4000;

/// Moments `m_0 .. m_{2(count−1)}` at one `τ`.
///
/// Where the chirp is slow enough, all moments share one set of 20-point Gauss–Legendre
/// panels whose width keeps the phase change per panel below 6 rad.
pub fn moments(weight: &RadialWeight, count: usize, tau: f64, rel: f64) -> Result<Vec<Complex64>> {
    if count == 0 || weight.is_zero() {
        return Ok(vec![Complex64::new(0.0, 0.0); count]);
    }
    let series_branch = weight
        .gaussian_form()
        .is_some_and(|(_, lambda)| tau.abs() >= SERIES_TAU_FACTOR * lambda);
    let cutoff = weight.cutoff(count as u32 - 1);
    let width = (0.25 / weight.lambda.sqrt()).min(6.0 / (tau.abs() * cutoff).max(1e-300));
    let panels = (cutoff / width).ceil() as usize;
    if series_branch || panels > SHARED_PANELS_MAX {
        return (0..count as u32).map(|n| moment(weight, n, tau, rel)).collect();
    }
    let rule = gauss_legendre(20);
    let h = cutoff / panels as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); count];
    for p in 0..panels {
        let c = (p as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let rho = c + 0.5 * h * x;
            let phase = -0.5 * tau * rho * rho;
            let mut v = Complex64::new(phase.cos(), phase.sin()) * (0.5 * h * w * weight.value(rho));
            let r2 = rho * rho;
            for m in out.iter_mut() {
                *m += v;
                v *= r2;
            }
        }
    }
    Ok(out)
}

/// `Σ_k w_k Γ(n+k+½) / (2 z^{n+k+½})` with `z = iτ/2` and `w_k = amp·(−λ)^k/k!`:
/// the expansion of the Gaussian moment in inverse powers of `z`, convergent for `|z| > λ`.
fn inverse_power_series(amp: f64, lambda: f64, n: u32, tau: f64) -> Complex64 {
    let z = Complex64::new(0.0, 0.5 * tau);
    let nu = n as f64 + 0.5;
    let mut term = amp * libm::tgamma(nu) / (2.0 * z.powf(nu));
    let mut sum = term;
    for k in 0..400 {
        term *= -lambda / (k as f64 + 1.0) * (nu + k as f64) / z;
        sum += term;
        if k > 2 && term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// Coefficients of `Ψ`, `a = ∂_rΨ/r` and `b = (∂²_rΨ − a)/r²` as power series in `s = r²`,
/// built from moments via `c_{2n} = 4π(−1)ⁿ m_{2n}/(2n+1)!`.
#[derive(Clone, Debug)]
pub struct RadialSeries {
    psi: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl RadialSeries {
    pub fn from_moments(m: &[Complex64]) -> Self {
        let mut c = Vec::with_capacity(m.len());
        let mut fact = 1.0; // (2n+1)!
        for (n, mn) in m.iter().enumerate() {
            if n > 0 {
                fact *= (2 * n) as f64 * (2 * n + 1) as f64;
            }
            let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
            c.push(*mn * (4.0 * PI * sgn / fact));
        }
        let a = (1..c.len()).map(|n| c[n] * (2 * n) as f64).collect();
        let b = (2..c.len()).map(|n| c[n] * ((2 * n) * (2 * n - 2)) as f64).collect();
        Self { psi: c, a, b }
    }

    fn horner(coef: &[Complex64], s: f64) -> Complex64 {
        coef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    pub fn psi(&self, s: f64) -> Complex64 {
        Self::horner(&self.psi, s)
    }

    pub fn a(&self, s: f64) -> Complex64 {
        Self::horner(&self.a, s)
    }

    pub fn b(&self, s: f64) -> Complex64 {
        Self::horner(&self.b, s)
    }

    /// Magnitude of the last retained term of `b` at `s`, a truncation proxy.
    pub fn tail_size(&self, s: f64) -> f64 {
        let n = self.b.len();
        if n == 0 {
            return 0.0;
        }
        self.b[n - 1].norm() * s.powi(n as i32 - 1) + self.a[self.a.len() - 1].norm() * s.powi(self.a.len() as i32 - 1)
    }

    pub fn a_coefficients(&self) -> &[Complex64] {
        &self.a
    }

    pub fn b_coefficients(&self) -> &[Complex64] {
        &self.b
    }
}

/// `j₁(x)/x`.
pub fn bessel_j1_over_x(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // Σ (−1)^k x^{2k} / (2^k k! (2k+3)!!)
        let x2 = x * x;
        let mut term = 1.0 / 3.0;
        let mut sum = term;
        for k in 1..12 {
            term *= -x2 / (2.0 * k as f64 * (2 * k + 3) as f64);
            sum += term;
        }
        sum
    } else {
        (x.sin() / x - x.cos()) / (x * x)
    }
}

/// `j₂(x)/x²`.
pub fn bessel_j2_over_x2(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let x2 = x * x;
        let mut term = 1.0 / 15.0;
        let mut sum = term;
        for k in 1..16 {
            term *= -x2 / (2.0 * k as f64 * (2 * k + 5) as f64);
            sum += term;
        }
        sum
    } else {
        let (s, c) = x.sin_cos();
        ((3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x)) / (x * x)
    }
}

/// `j₀(x)`.
pub fn bessel_j0(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Which radial transform [`radial_quadrature`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadialKind {
    /// `4π ∫ g j₀(ρr) e dρ`
    Psi,
    /// `−4π ∫ ρ² g (j₁(ρr)/(ρr)) e dρ`
    A,
    /// `4π ∫ ρ⁴ g (j₂(ρr)/(ρr)²) e dρ`
    B,
}

/// Direct quadrature of a radial transform of `ρ^{2·shift} g`, for displacements
/// too large for the power series.
pub fn radial_quadrature(
    weight: &RadialWeight,
    kind: RadialKind,
    shift: u32,
    tau: f64,
    r: f64,
    abs_target: f64,
) -> Result<Complex64> {
    if weight.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p = 2 * shift as i32;
    let mut g = |rho: f64| -> Complex64 {
        let x = rho * r;
        let base = weight.value(rho) * rho.powi(p);
        let v = match kind {
            RadialKind::Psi => 4.0 * PI * base * bessel_j0(x),
            RadialKind::A => -4.0 * PI * base * rho * rho * bessel_j1_over_x(x),
            RadialKind::B => 4.0 * PI * base * rho.powi(4) * bessel_j2_over_x2(x),
        };
        Complex64::new(v, 0.0)
    };
    let spec = QuadratureSpec {
        target: abs_target,
        radius: weight.cutoff(shift + 2),
        ..QuadratureSpec::default()
    };
    let width = 0.5f64.min(1.0 / r.max(1e-300)).min(0.5 / weight.lambda.sqrt());
    let opts = ChirpOptions { max_width: width, ..ChirpOptions::default() };
    Ok(chirp_integral(&mut g, 0.5 * tau, &spec, &opts)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_branches_agree() {
        for x in [0.49999f64, 0.5, 0.99999, 1.0] {
            let a = (x.sin() / x - x.cos()) / (x * x);
            assert!((bessel_j1_over_x(x) - a).abs() < 1e-13);
            let (s, c) = x.sin_cos();
            let b = ((3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x)) / (x * x);
            assert!((bessel_j2_over_x2(x) - b).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn series_and_quadrature_overlap() {
        let pot = RadialPotential::default();
        let w = RadialWeight::w_sq(&pot);
        for n in [0, 1, 4] {
            let tau = 16.5;
            let s = inverse_power_series(1.0, 1.0, n, tau);
            let spec = QuadratureSpec { target: 1e-12 * w.moment_scale(n), radius: w.cutoff(n), ..Default::default() };
            let f = |r: f64| w.value(r);
            let q = gauss_oscillatory_with(&f, Complex64::new(0.0, 0.5 * tau), 2 * n, &spec, &ChirpOptions::default())
                .unwrap();
            assert!((s - q.value).norm() < 1e-10 * w.moment_scale(n), "n={n}: {s} vs {}", q.value);
        }
    }
}
