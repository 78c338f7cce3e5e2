use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the coupling profile `Ŵ(ρ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `Ŵ(ρ) = e^{−σ²ρ²/2}`.
    Gaussian { sigma: f64 },
    /// Samples of `Ŵ` on an increasing `ρ` grid starting at 0, interpolated by a
    /// natural cubic spline and taken as zero past the last node.
    Tabulated { rho: Vec<f64>, values: Vec<f64> },
}

/// A spherically symmetric coupling profile with `Ŵ(0) = 1`, optionally scaled
/// by an overall amplitude (amplitude 0 switches the coupling off at the kernel level).
#[derive(Clone, Debug, PartialEq)]
pub struct RadialPotential {
    profile: Profile,
    amplitude: f64,
    spline: Option<Spline>,
}

#[derive(Clone, Debug, PartialEq)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal solve for second derivatives, natural end conditions
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t >= self.x[n - 1] {
            return 0.0;
        }
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

impl RadialPotential {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(Self { profile: Profile::Gaussian { sigma }, amplitude: 1.0, spline: None })
    }

    pub fn tabulated(rho: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if rho.len() != values.len() || rho.len() < 4 {
            return Err(Error::InvalidArgument("tabulated profile needs >= 4 matching samples".into()));
        }
        if rho[0] != 0.0 || rho.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("rho grid must start at 0 and increase".into()));
        }
        if (values[0] - 1.0).abs() >= 1e-10 {
            return Err(Error::InvalidArgument(format!("W(0) must be 1, got {}", values[0])));
        }
        let tail = values.iter().rev().take(2).fold(0.0f64, |m, v| m.max(v.abs()));
        if tail > 1e-8 {
            return Err(Error::InvalidArgument(format!("profile must decay to ~0 at the last node, got {tail:e}")));
        }
        let spline = Spline::natural(rho.clone(), values.clone());
        Ok(Self { profile: Profile::Tabulated { rho, values }, amplitude: 1.0, spline: Some(spline) })
    }

    pub fn from_profile(profile: Profile) -> Result<Self> {
        match profile {
            Profile::Gaussian { sigma } => Self::gaussian(sigma),
            Profile::Tabulated { rho, values } => Self::tabulated(rho, values),
        }
    }

    /// The same profile multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { amplitude: self.amplitude * factor, ..self.clone() }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn gaussian_sigma(&self) -> Option<f64> {
        match self.profile {
            Profile::Gaussian { sigma } => Some(sigma),
            Profile::Tabulated { .. } => None,
        }
    }

    pub fn w_hat(&self, rho: f64) -> f64 {
        let r = rho.abs();
        let v = match (&self.profile, &self.spline) {
            (Profile::Gaussian { sigma }, _) => (-0.5 * sigma * sigma * r * r).exp(),
            (_, Some(s)) => s.eval(r),
            _ => unreachable!("tabulated profile always carries a spline"),
        };
        self.amplitude * v
    }

    pub fn w_hat_sq(&self, rho: f64) -> f64 {
        let w = self.w_hat(rho);
        w * w
    }

    /// Radius past which `|Ŵ|²` is negligible for any quadrature target.
    pub fn cutoff(&self) -> f64 {
        match &self.profile {
            Profile::Gaussian { sigma } => 12.0 / sigma,
            Profile::Tabulated { rho, .. } => *rho.last().expect("validated non-empty"),
        }
    }

    /// Coefficients `w_k` of `|Ŵ|² = Σ w_k ρ^{2k}`, when an entire expansion is known.
    pub fn taylor_sq(&self, terms: usize) -> Option<Vec<f64>> {
        let sigma = self.gaussian_sigma()?;
        let s2 = sigma * sigma;
        let a2 = self.amplitude * self.amplitude;
        let mut out = Vec::with_capacity(terms);
        let mut c = a2;
        for k in 0..terms {
            out.push(c);
            c *= -s2 / (k as f64 + 1.0);
        }
        Some(out)
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }
}

impl Default for RadialPotential {
    fn default() -> Self {
        Self::gaussian(1.0).expect("sigma = 1 is valid")
    }
}

/// Coupling strength `ν` and the derived memory constant `Z = 2ν/3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    nu: f64,
}

impl CouplingConstants {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("nu must be >= 0, got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn z(&self) -> f64 {
        2.0 * self.nu / 3.0
    }
}

impl Default for CouplingConstants {
    fn default() -> Self {
        Self { nu: 1.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_matches_gaussian() {
        let rho: Vec<f64> = (0..=400).map(|i| i as f64 * 0.03).collect();
        let vals: Vec<f64> = rho.iter().map(|r| (-0.5 * r * r).exp()).collect();
        let t = RadialPotential::tabulated(rho, vals).unwrap();
        let g = RadialPotential::default();
        for r in [0.0, 0.11, 1.37, 2.9, 5.0] {
            assert!((t.w_hat(r) - g.w_hat(r)).abs() < 1e-6, "{r}");
        }
        assert_eq!(t.w_hat(20.0), 0.0);
    }

    #[test]
    fn rejects_unnormalized_table() {
        let rho = vec![0.0, 1.0, 2.0, 3.0];
        assert!(RadialPotential::tabulated(rho, vec![0.9, 0.5, 0.1, 0.0]).is_err());
    }

    #[test]
    fn z_ratio() {
        let c = CouplingConstants::new(1.5).unwrap();
        assert_eq!(c.z() / c.nu(), 2.0 / 3.0);
    }
}
