//! Wavenumber node sets.

use std::f64::consts::PI;

use hfric_core::kernels::Vec3;
use hfric_quad::{gauss_legendre, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{OracleError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// Gauss–Legendre in `k_ρ` on `[0, k_max]` times midpoints in `k_z` on `[−k_max, k_max]`.
    /// Only fields symmetric about the z-axis, with the particle on it, can be represented.
    Axisymmetric { k_max: f64, n_rho: usize, n_z: usize },
    /// Midpoints on the cube `[−k_max, k_max]³`.
    Cartesian { k_max: f64, n: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Axisymmetric { k_max: 12.0, n_rho: 256, n_z: 512 }
    }
}

impl GridSpec {
    pub fn is_axisymmetric(&self) -> bool {
        matches!(self, GridSpec::Axisymmetric { .. })
    }

    pub fn k_max(&self) -> f64 {
        match *self {
            GridSpec::Axisymmetric { k_max, .. } | GridSpec::Cartesian { k_max, .. } => k_max,
        }
    }

    /// Spacing of the uniform axes.
    pub fn dk(&self) -> f64 {
        match *self {
            GridSpec::Axisymmetric { k_max, n_z, .. } => 2.0 * k_max / n_z as f64,
            GridSpec::Cartesian { k_max, n } => 2.0 * k_max / n as f64,
        }
    }

    /// Spatial period implied by the uniform axes; anything farther than half of it
    /// from the origin is aliased.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.dk()
    }

    pub fn len(&self) -> usize {
        match *self {
            GridSpec::Axisymmetric { n_rho, n_z, .. } => n_rho * n_z,
            GridSpec::Cartesian { n, .. } => n * n * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Twice the nodes along every axis.
    pub fn refined(&self) -> Self {
        match *self {
            GridSpec::Axisymmetric { k_max, n_rho, n_z } => {
                GridSpec::Axisymmetric { k_max, n_rho: 2 * n_rho, n_z: 2 * n_z }
            }
            GridSpec::Cartesian { k_max, n } => GridSpec::Cartesian { k_max, n: 2 * n },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (k_max, counts) = match *self {
            GridSpec::Axisymmetric { k_max, n_rho, n_z } => (k_max, [n_rho, n_z]),
            GridSpec::Cartesian { k_max, n } => (k_max, [n, n]),
        };
        if !(k_max > 0.0 && k_max.is_finite()) || counts.iter().any(|&c| c < 2) {
            return Err(OracleError::InvalidArgument(format!("bad grid {self:?}")));
        }
        Ok(())
    }
}

/// Quadrature nodes and weights for `∫_{ℝ³} f(k) dk`.
#[derive(Clone, Debug)]
pub struct NodeSet {
    pub spec: GridSpec,
    /// Node wavevectors; `(k_ρ, 0, k_z)` in the axisymmetric case.
    pub k: Vec<Vec3>,
    pub k_sq: Vec<f64>,
    /// Weights, including the `2π k_ρ` Jacobian in the axisymmetric case.
    pub weight: Vec<f64>,
    /// Position of each node on the three uniform axes.
    pub axis_index: Vec<[u32; 3]>,
    /// Values of the uniform axes; a missing axis is the single value 0.
    pub axes: [Vec<f64>; 3],
}

fn midpoints(k_max: f64, n: usize) -> Vec<f64> {
    let dk = 2.0 * k_max / n as f64;
    (0..n).map(|i| -k_max + (i as f64 + 0.5) * dk).collect()
}

impl NodeSet {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let mut me = Self {
            spec,
            k: Vec::with_capacity(spec.len()),
            k_sq: Vec::with_capacity(spec.len()),
            weight: Vec::with_capacity(spec.len()),
            axis_index: Vec::with_capacity(spec.len()),
            axes: [vec![0.0], vec![0.0], vec![0.0]],
        };
        let dk = spec.dk();
        match spec {
            GridSpec::Axisymmetric { k_max, n_rho, n_z } => {
                let gl = gauss_legendre(n_rho);
                let kz = midpoints(k_max, n_z);
                for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                    let rho = 0.5 * k_max * (x + 1.0);
                    let w_rho = 0.5 * k_max * w * 2.0 * PI * rho;
                    for (j, z) in kz.iter().enumerate() {
                        me.k.push([rho, 0.0, *z]);
                        me.k_sq.push(rho * rho + z * z);
                        me.weight.push(w_rho * dk);
                        me.axis_index.push([0, 0, j as u32]);
                    }
                }
                me.axes[2] = kz;
            }
            GridSpec::Cartesian { k_max, n } => {
                let ax = midpoints(k_max, n);
                let w = dk * dk * dk;
                for (i, x) in ax.iter().enumerate() {
                    for (j, y) in ax.iter().enumerate() {
                        for (l, z) in ax.iter().enumerate() {
                            me.k.push([*x, *y, *z]);
                            me.k_sq.push(x * x + y * y + z * z);
                            me.weight.push(w);
                            me.axis_index.push([i as u32, j as u32, l as u32]);
                        }
                    }
                }
                me.axes = [ax.clone(), ax.clone(), ax];
            }
        }
        Ok(me)
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Reject positions the node set cannot represent.
    pub fn check_position(&self, x: &Vec3) -> Result<()> {
        if self.spec.is_axisymmetric() && (x[0] != 0.0 || x[1] != 0.0) {
            return Err(OracleError::InvalidArgument(format!("axisymmetric grid needs a point on the z-axis, got {x:?}")));
        }
        let limit = 0.25 * self.spec.period();
        if x.iter().any(|c| c.abs() > limit) {
            return Err(OracleError::Aliasing(format!("|x| component beyond {limit} at {x:?}")));
        }
        Ok(())
    }

    /// Per-axis tables of `e^{−i k_a x_a}`.
    pub fn phase_tables(&self, x: &Vec3) -> [Vec<Complex64>; 3] {
        std::array::from_fn(|a| self.axes[a].iter().map(|k| Complex64::from_polar(1.0, -k * x[a])).collect())
    }

    /// `e^{−i k·x}` at node `n` from the tables.
    #[inline]
    pub fn phase(&self, tables: &[Vec<Complex64>; 3], n: usize) -> Complex64 {
        let [i, j, l] = self.axis_index[n];
        match self.spec {
            GridSpec::Axisymmetric { .. } => tables[2][l as usize],
            GridSpec::Cartesian { .. } => tables[0][i as usize] * tables[1][j as usize] * tables[2][l as usize],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_a_gaussian() {
        for spec in [GridSpec::Axisymmetric { k_max: 10.0, n_rho: 64, n_z: 128 }, GridSpec::Cartesian { k_max: 8.0, n: 48 }] {
            let nodes = NodeSet::new(spec).unwrap();
            let s: f64 = nodes.k_sq.iter().zip(&nodes.weight).map(|(k2, w)| w * (-k2).exp()).sum();
            assert!((s - PI.powf(1.5)).abs() < 1e-10, "{spec:?}: {s}");
        }
    }

    #[test]
    fn no_node_at_the_origin() {
        let nodes = NodeSet::new(GridSpec::Cartesian { k_max: 4.0, n: 8 }).unwrap();
        assert!(nodes.k_sq.iter().all(|k| *k > 0.0));
    }
}
