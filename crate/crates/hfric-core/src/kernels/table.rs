//! Interpolable kernel samples with a measured error budget and a power-law tail.

use std::io::Write;

use hfric_quad::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Sampling of one table axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Axis {
    /// `n` nodes uniformly spaced in `ln x` on `[min, max]`, `min > 0`.
    Log { min: f64, max: f64, n: usize },
    Uniform { min: f64, max: f64, n: usize },
}

impl Axis {
    fn len(&self) -> usize {
        match *self {
            Axis::Log { n, .. } | Axis::Uniform { n, .. } => n,
        }
    }

    fn coord(&self, x: f64) -> f64 {
        match self {
            Axis::Log { .. } => x.ln(),
            Axis::Uniform { .. } => x,
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            Axis::Log { min, max, .. } | Axis::Uniform { min, max, .. } => (min, max),
        }
    }

    /// Node `i`, with half-integer positions giving the held-out midpoints.
    fn node(&self, i: f64) -> f64 {
        let n = self.len() as f64 - 1.0;
        match *self {
            Axis::Log { min, max, .. } => (min.ln() + (max.ln() - min.ln()) * i / n).exp(),
            Axis::Uniform { min, max, .. } => min + (max - min) * i / n,
        }
    }

    fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i as f64)).collect()
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.range();
        let ok = self.len() >= 4
            && hi > lo
            && match self {
                Axis::Log { .. } => lo > 0.0,
                Axis::Uniform { .. } => true,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad table axis {self:?}")))
        }
    }

    /// Index of the first of the four stencil nodes and the fractional position.
    fn stencil(&self, x: f64) -> (usize, f64) {
        let n = self.len();
        let (lo, hi) = self.range();
        let u = (self.coord(x) - self.coord(lo)) / (self.coord(hi) - self.coord(lo)) * (n - 1) as f64;
        let i = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        (i, u - i as f64)
    }
}

/// Cubic Lagrange weights on nodes 0, 1, 2, 3 at position `u`.
fn lagrange4(u: f64) -> [f64; 4] {
    let (a, b, c, d) = (u, u - 1.0, u - 2.0, u - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// `value ≈ coefficient · t^{−power}` beyond the last node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailDescriptor {
    pub power: f64,
    pub coefficient: f64,
    /// Largest relative misfit of the law on the last decade of nodes.
    pub misfit: f64,
}

/// Kernel samples on a `t` axis and optionally an `r` axis, interpolated by
/// 4-point Lagrange stencils in the axis coordinate.
#[derive(Clone, Debug, Serialize)]
pub struct KernelTable {
    pub name: String,
    pub t_axis: Axis,
    pub r_axis: Option<Axis>,
    /// Row-major `t × r`.
    #[serde(skip)]
    values: Vec<Complex64>,
    pub order: usize,
    /// Largest interpolation error observed on held-out midpoints.
    pub max_error: f64,
    pub tail: Option<TailDescriptor>,
}

impl KernelTable {
    /// Tabulate a function of `t`, measuring the interpolation error at every midpoint
    /// and fitting a power-law tail to the real part on the last decade.
    pub fn tabulate_1d(
        name: &str,
        t_axis: Axis,
        f: &mut dyn FnMut(f64) -> Result<Complex64>,
    ) -> Result<Self> {
        t_axis.validate()?;
        let ts = t_axis.nodes();
        let values = ts.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        let mut table = Self {
            name: name.into(),
            t_axis,
            r_axis: None,
            values,
            order: 3,
            max_error: 0.0,
            tail: None,
        };
        let mut err = 0.0f64;
        for i in 0..ts.len() - 1 {
            let t = t_axis.node(i as f64 + 0.5);
            err = err.max((table.interp_1d(t) - f(t)?).norm());
        }
        table.max_error = err;
        table.tail = fit_tail(&ts, &table.values);
        Ok(table)
    }

    /// Tabulate a function of `(t, r)`; `row(t, rs)` returns one row for all radii.
    /// Held-out error is measured on the cell centres of every other row.
    pub fn tabulate_2d(
        name: &str,
        t_axis: Axis,
        r_axis: Axis,
        row: &mut dyn FnMut(f64, &[f64]) -> Result<Vec<Complex64>>,
    ) -> Result<Self> {
        t_axis.validate()?;
        r_axis.validate()?;
        let ts = t_axis.nodes();
        let rs = r_axis.nodes();
        let mut values = Vec::with_capacity(ts.len() * rs.len());
        for &t in &ts {
            values.extend(row(t, &rs)?);
        }
        let mut table =
            Self { name: name.into(), t_axis, r_axis: Some(r_axis), values, order: 3, max_error: 0.0, tail: None };
        let mids: Vec<f64> = (0..rs.len() - 1).map(|j| r_axis.node(j as f64 + 0.5)).collect();
        let mut err = 0.0f64;
        for i in (0..ts.len() - 1).step_by(2) {
            let t = t_axis.node(i as f64 + 0.5);
            let exact = row(t, &mids)?;
            for (r, e) in mids.iter().zip(exact) {
                err = err.max((table.interp_2d(t, *r) - e).norm());
            }
        }
        table.max_error = err;
        let first_col: Vec<Complex64> = (0..ts.len()).map(|i| table.values[i * rs.len()]).collect();
        table.tail = fit_tail(&ts, &first_col);
        Ok(table)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn interp_1d(&self, t: f64) -> Complex64 {
        let (i, u) = self.t_axis.stencil(t);
        let w = lagrange4(u);
        (0..4).map(|k| self.values[i + k] * w[k]).sum()
    }

    fn interp_2d(&self, t: f64, r: f64) -> Complex64 {
        let r_axis = self.r_axis.expect("2-D table");
        let nr = r_axis.len();
        let (i, u) = self.t_axis.stencil(t);
        let (j, v) = r_axis.stencil(r);
        let wt = lagrange4(u);
        let wr = lagrange4(v);
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            for b in 0..4 {
                acc += self.values[(i + a) * nr + j + b] * (wt[a] * wr[b]);
            }
        }
        acc
    }

    /// Interpolated value at `t` (and `r` for 2-D tables). Beyond the last `t` node
    /// a 1-D table returns its tail law.
    pub fn eval(&self, t: f64, r: Option<f64>) -> Result<Complex64> {
        let (t_lo, t_hi) = self.t_axis.range();
        match (self.r_axis, r) {
            (None, None) => {
                if t > t_hi {
                    let tail = self.tail.ok_or_else(|| Error::OutOfRange(format!("{}: no tail", self.name)))?;
                    return Ok(Complex64::new(tail.coefficient * t.powf(-tail.power), 0.0));
                }
                if t < t_lo {
                    return Err(Error::OutOfRange(format!("{}: t = {t} below table", self.name)));
                }
                Ok(self.interp_1d(t))
            }
            (Some(ra), Some(r)) => {
                let (r_lo, r_hi) = ra.range();
                if t < t_lo || t > t_hi || r < r_lo || r > r_hi {
                    return Err(Error::OutOfRange(format!("{}: ({t}, {r}) outside table", self.name)));
                }
                Ok(self.interp_2d(t, r))
            }
            _ => Err(Error::InvalidArgument(format!("{}: wrong number of coordinates", self.name))),
        }
    }

    /// CSV with columns `t, r, re, im` (the `r` column is empty for 1-D tables).
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,r,re,im")?;
        let ts = self.t_axis.nodes();
        match self.r_axis {
            None => {
                for (t, v) in ts.iter().zip(&self.values) {
                    writeln!(out, "{t:e},,{:e},{:e}", v.re, v.im)?;
                }
            }
            Some(ra) => {
                let rs = ra.nodes();
                for (i, t) in ts.iter().enumerate() {
                    for (j, r) in rs.iter().enumerate() {
                        let v = self.values[i * rs.len() + j];
                        writeln!(out, "{t:e},{r:e},{:e},{:e}", v.re, v.im)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Least-squares `ln|v| = ln|c| − p ln t` over the last decade of nodes.
fn fit_tail(ts: &[f64], values: &[Complex64]) -> Option<TailDescriptor> {
    let t_end = *ts.last()?;
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= 0.1 * t_end && **t > 0.0 && v.re != 0.0)
        .map(|(t, v)| (*t, v.re))
        .collect();
    if pts.len() < 3 || t_end < 10.0 * ts[0].max(1e-300) {
        return None;
    }
    let sign = pts[pts.len() - 1].1.signum();
    if pts.iter().any(|p| p.1.signum() != sign) {
        return None;
    }
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (t, v) in &pts {
        let (x, y) = (t.ln(), v.abs().ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let icpt = (sy - slope * sx) / n;
    let coefficient = sign * icpt.exp();
    let power = -slope;
    let misfit = pts
        .iter()
        .map(|(t, v)| ((coefficient * t.powf(-power) - v) / v).abs())
        .fold(0.0, f64::max);
    Some(TailDescriptor { power, coefficient, misfit })
}
