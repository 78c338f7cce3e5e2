//! The fluctuation field on a node set and the coupled time step.
//!
//! In wavenumber space the field obeys `i∂_t β̂ = ω β̂ + Ŵ e^{ik·X}` with `ω = |k|²/2`
//! and the particle feels `Ṗ = ν Re Σ w ik Ŵ e^{−ik·X} β̂`. The step is the Strang
//! splitting drift(h/2), interaction(h), drift(h/2), where the interaction part is
//! the exact flow of the field and interaction energy at frozen `X`: it moves `β̂`
//! under a constant source and gives `P` the time integral of the force along the way.

use std::sync::Arc;

use hfric_core::dynamics::{FieldInit, ParticleState};
use hfric_core::kernels::{RadialPotential, Vec3};
use hfric_quad::Complex64;

use crate::error::{OracleError, Result};
use crate::grid::NodeSet;

/// Nodes per Gaussian width (in `k`) required of the uniform axes.
pub const NODES_PER_WIDTH: f64 = 8.0;

/// The field `β̂` at the nodes, at time `t`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub nodes: Arc<NodeSet>,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl SpectralField {
    pub fn zero(nodes: Arc<NodeSet>) -> Self {
        let n = nodes.len();
        Self { nodes, values: vec![Complex64::new(0.0, 0.0); n], t: 0.0 }
    }

    /// `‖β‖₂ = (Σ w |β̂|²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.values.iter().zip(&self.nodes.weight).map(|(b, w)| w * b.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Columns `k1, k2, k3, re, im`, one row per node; `(k_ρ, 0, k_z)` on axisymmetric grids.
    pub fn write_slice(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(out, "k1,k2,k3,re,im")?;
        for (k, b) in self.nodes.k.iter().zip(&self.values) {
            writeln!(out, "{:e},{:e},{:e},{:e},{:e}", k[0], k[1], k[2], b.re, b.im)?;
        }
        Ok(())
    }

    /// `β(x) = (2π)^{−3/2} Σ w e^{−ik·x} β̂`.
    pub fn value_at(&self, x: &Vec3) -> Result<Complex64> {
        self.nodes.check_position(x)?;
        let tables = self.nodes.phase_tables(x);
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, (b, w)) in self.values.iter().zip(&self.nodes.weight).enumerate() {
            acc += self.nodes.phase(&tables, n) * b * *w;
        }
        Ok(acc * (2.0 * std::f64::consts::PI).powf(-1.5))
    }
}

/// Sample `β̂₀(k) = A w³ e^{−w²|k|²/2} e^{ik·c}`.
pub fn init_field(init: &FieldInit, nodes: Arc<NodeSet>) -> Result<SpectralField> {
    if init.is_zero() {
        return Ok(SpectralField::zero(nodes));
    }
    let w = init.width;
    let spec = nodes.spec;
    if spec.dk() > 1.0 / (NODES_PER_WIDTH * w) {
        return Err(OracleError::UnderResolved(format!(
            "spacing {} exceeds 1/({NODES_PER_WIDTH} w) = {}",
            spec.dk(),
            1.0 / (NODES_PER_WIDTH * w)
        )));
    }
    if spec.k_max() * w < 6.0 {
        return Err(OracleError::UnderResolved(format!("k_max·w = {} < 6 truncates the packet", spec.k_max() * w)));
    }
    nodes.check_position(&init.center)?;
    let tables = nodes.phase_tables(&init.center);
    let amp = init.amplitude * w.powi(3);
    let values = (0..nodes.len())
        .map(|n| nodes.phase(&tables, n).conj() * (amp * (-0.5 * w * w * nodes.k_sq[n]).exp()))
        .collect();
    Ok(SpectralField { nodes, values, t: 0.0 })
}

/// The coupling on a node set: `ν`, `Ŵ` and `ω` at every node.
#[derive(Clone, Debug)]
pub struct Medium {
    pub nodes: Arc<NodeSet>,
    pub nu: f64,
    pub w_hat: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Medium {
    pub fn new(nodes: Arc<NodeSet>, pot: &RadialPotential, nu: f64) -> Self {
        let w_hat = nodes.k_sq.iter().map(|k2| pot.w_hat(k2.sqrt())).collect();
        let omega = nodes.k_sq.iter().map(|k2| 0.5 * k2).collect();
        Self { nodes, nu, w_hat, omega }
    }

    fn check(&self, field: &SpectralField, x: &Vec3) -> Result<()> {
        if !Arc::ptr_eq(&field.nodes, &self.nodes) && field.nodes.spec != self.nodes.spec {
            return Err(OracleError::InvalidArgument("field and medium live on different nodes".into()));
        }
        self.nodes.check_position(x)
    }

    /// `ν Re Σ w ik Ŵ e^{−ik·X} β̂`.
    pub fn force(&self, field: &SpectralField, x: &Vec3) -> Result<Vec3> {
        self.check(field, x)?;
        let nodes = &*self.nodes;
        let tables = nodes.phase_tables(x);
        let mut f = [0.0; 3];
        for (n, b) in field.values.iter().enumerate() {
            let u = nodes.phase(&tables, n) * b;
            // Re(i u) = −Im u
            let s = -u.im * self.w_hat[n] * nodes.weight[n];
            for (fa, ka) in f.iter_mut().zip(&nodes.k[n]) {
                *fa += s * ka;
            }
        }
        if nodes.spec.is_axisymmetric() {
            // the azimuthal integral removes the transverse parts
            f[0] = 0.0;
            f[1] = 0.0;
        }
        Ok(f.map(|v| self.nu * v))
    }

    /// `E = ½|P|² + (ν/4)‖∇β‖² + ν Re⟨W^X, β⟩`.
    pub fn energy(&self, field: &SpectralField, x: &Vec3, p: &Vec3) -> Result<f64> {
        self.check(field, x)?;
        let nodes = &*self.nodes;
        let tables = nodes.phase_tables(x);
        let mut acc = 0.0;
        for (n, b) in field.values.iter().enumerate() {
            let u = nodes.phase(&tables, n) * b;
            acc += nodes.weight[n] * (0.25 * nodes.k_sq[n] * b.norm_sqr() + self.w_hat[n] * u.re);
        }
        Ok(0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) + self.nu * acc)
    }

    /// The static splash `−2(−Δ)^{−1}W^X`, i.e. `−2Ŵ e^{ik·X}/|k|²` at the nodes.
    pub fn splash(&self, x: &Vec3, t: f64) -> Result<SpectralField> {
        self.nodes.check_position(x)?;
        let nodes = &*self.nodes;
        let tables = nodes.phase_tables(x);
        let values =
            (0..nodes.len()).map(|n| nodes.phase(&tables, n).conj() * (-2.0 * self.w_hat[n] / nodes.k_sq[n])).collect();
        Ok(SpectralField { nodes: self.nodes.clone(), values, t })
    }

    /// `sup_j |β(X + d_j ẑ) + 2(−Δ)^{−1}W^X(X + d_j ẑ)|` over axial offsets `d_j`.
    pub fn splash_residual(&self, field: &SpectralField, x: &Vec3, offsets: &[f64]) -> Result<f64> {
        self.check(field, x)?;
        let splash = self.splash(x, field.t)?;
        let diff = SpectralField {
            nodes: self.nodes.clone(),
            values: field.values.iter().zip(&splash.values).map(|(b, s)| b - s).collect(),
            t: field.t,
        };
        let mut sup = 0.0f64;
        for d in offsets {
            let point = [x[0], x[1], x[2] + d];
            sup = sup.max(diff.value_at(&point)?.norm());
        }
        Ok(sup)
    }
}

/// Per-node factors of the interaction flow over one step `h`.
#[derive(Clone, Debug)]
pub struct Stepper {
    pub h: f64,
    medium: Medium,
    /// `e^{−iωh}`.
    decay: Vec<Complex64>,
    /// `c₁ = ∫₀ʰ e^{−iωs} ds`.
    c1: Vec<Complex64>,
    /// `−i c₁ Ŵ`: the source's contribution, to be multiplied by `e^{ik·X}`.
    source: Vec<Complex64>,
    /// `ν ∫₀ʰ Re Σ w ik Ŵ² c₂`, the impulse of the field created during the step,
    /// with `c₂ = (c₁ − h)/ω`.
    self_impulse: Vec3,
}

/// `(c₁, c₂)` for `ωh`, by series where cancellation would hurt.
fn flow_coefficients(omega: f64, h: f64) -> (Complex64, Complex64) {
    let z = Complex64::new(0.0, -omega * h);
    if (omega * h).abs() < 1e-2 {
        // c₁ = h Σ zⁿ/(n+1)!, c₂ = −i h² Σ zⁿ/(n+2)!
        let (mut s1, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..12 {
            s1 += term / factorial(n + 1);
            s2 += term / factorial(n + 2);
            term *= z;
        }
        (s1 * h, Complex64::new(0.0, -h * h) * s2)
    } else {
        let c1 = (Complex64::new(1.0, 0.0) - z.exp()) / Complex64::new(0.0, omega);
        (c1, (c1 - h) / omega)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Stepper {
    pub fn new(medium: &Medium, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(OracleError::InvalidArgument(format!("step must be > 0, got {h}")));
        }
        let nodes = &*medium.nodes;
        let n = nodes.len();
        let (mut decay, mut c1s, mut source) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut self_impulse = [0.0; 3];
        for i in 0..n {
            let om = medium.omega[i];
            let (c1, c2) = flow_coefficients(om, h);
            decay.push(Complex64::from_polar(1.0, -om * h));
            c1s.push(c1);
            source.push(Complex64::new(0.0, -1.0) * c1 * medium.w_hat[i]);
            let s = -c2.im * medium.w_hat[i] * medium.w_hat[i] * nodes.weight[i];
            for (a, ka) in self_impulse.iter_mut().zip(&nodes.k[i]) {
                *a += s * ka;
            }
        }
        if nodes.spec.is_axisymmetric() {
            self_impulse[0] = 0.0;
            self_impulse[1] = 0.0;
        }
        Ok(Self {
            h,
            medium: medium.clone(),
            decay,
            c1: c1s,
            source,
            self_impulse: self_impulse.map(|v| medium.nu * v),
        })
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    /// Advance field and particle by one step; returns the impulse given to `P`.
    pub fn step(&self, field: &mut SpectralField, state: &mut ParticleState) -> Result<Vec3> {
        let h = self.h;
        let nodes = &*self.medium.nodes;
        let mid: Vec3 = std::array::from_fn(|a| state.x[a] + 0.5 * h * state.p[a]);
        nodes.check_position(&mid)?;
        let tables = nodes.phase_tables(&mid);
        let axisymmetric = nodes.spec.is_axisymmetric();
        let mut j = [0.0; 3];
        for (n, b) in field.values.iter_mut().enumerate() {
            let p = nodes.phase(&tables, n);
            let u = p * *b * self.c1[n];
            let s = -u.im * self.medium.w_hat[n] * nodes.weight[n];
            if axisymmetric {
                j[2] += s * nodes.k[n][2];
            } else {
                for (ja, ka) in j.iter_mut().zip(&nodes.k[n]) {
                    *ja += s * ka;
                }
            }
            *b = self.decay[n] * *b + self.source[n] * p.conj();
        }
        let impulse: Vec3 = std::array::from_fn(|a| self.medium.nu * j[a] + self.self_impulse[a]);
        for a in 0..3 {
            state.p[a] += impulse[a];
            state.x[a] = mid[a] + 0.5 * h * state.p[a];
        }
        state.t += h;
        field.t += h;
        Ok(impulse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_closed_form_agree_at_the_switch() {
        let h = 0.01;
        let om = 1e-2 / h;
        let (a1, a2) = flow_coefficients(om * (1.0 - 1e-12), h);
        let (b1, b2) = flow_coefficients(om * (1.0 + 1e-12), h);
        assert!((a1 - b1).norm() < 1e-12 * h, "{a1} {b1} {a2} {b2}");
        assert!((a2 - b2).norm() < 1e-10 * h * h, "{a2} {b2}");
    }
}
