//! The propagator `K(t)` of `K̇ = −Z ∫₀ᵗ M(t−s) K(s) ds`, `K(0) = 1`, computed by
//! Volterra stepping and, independently, by Fourier inversion of `−1/(ik + Z G(k+i0))`.

use std::f64::consts::PI;
use std::io::Write;

use hfric_quad::{causal_inversion, fourier_inversion, Complex64, QuadratureSpec};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{eval_g_with, eval_m, eval_v, CouplingConstants, RadialPotential};
use crate::volterra::{trapezoid_convolution, HistoryConvolver};

/// Largest number of grid points any single Volterra run may use.
pub const MAX_STEPS: usize = 4_000_000;

/// Largest step-halving change tolerated on `[0, 100]`.
pub const HALVING_LIMIT: f64 = 1e-6;

/// `¼π^{−5/2}`, the limit of `Z K(t) t^{1/2}`.
pub fn tail_amplitude() -> f64 {
    0.25 * PI.powf(-2.5)
}

/// `M` (and optionally `V`) sampled at `t_m = m·h`.
#[derive(Clone, Debug)]
pub struct CorrelationGrid {
    pub step: f64,
    pub m: Vec<f64>,
    /// `V(t_m)`, with `V(0) = 0`.
    pub v: Option<Vec<f64>>,
}

impl CorrelationGrid {
    pub fn new(pot: &RadialPotential, step: f64, points: usize, with_v: bool) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be > 0, got {step}")));
        }
        let m = (0..points).map(|i| eval_m(pot, i as f64 * step)).collect::<Result<Vec<_>>>()?;
        let v = if with_v {
            let mut v = vec![0.0];
            for i in 1..points {
                v.push(eval_v(pot, i as f64 * step)?);
            }
            Some(v)
        } else {
            None
        };
        Ok(Self { step, m, v })
    }

    /// Every `factor`-th sample.
    pub fn subsample(&self, factor: usize) -> Self {
        let pick = |x: &Vec<f64>| x.iter().step_by(factor).copied().collect::<Vec<_>>();
        Self { step: self.step * factor as f64, m: pick(&self.m), v: self.v.as_ref().map(pick) }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// `M` and `V` at arbitrary `t ≥ 0`: cubic interpolation of a fine grid where the
/// moments need quadrature, direct evaluation beyond it.
#[derive(Clone, Debug)]
pub struct Correlations {
    pot: RadialPotential,
    grid: CorrelationGrid,
    split: f64,
}

impl Correlations {
    pub fn new(pot: &RadialPotential) -> Result<Self> {
        let step = 0.01;
        let split = 20.0;
        let grid = CorrelationGrid::new(pot, step, (split / step) as usize + 4, true)?;
        Ok(Self { pot: pot.clone(), grid, split })
    }

    fn interp(&self, data: &[f64], t: f64) -> f64 {
        let u = t / self.grid.step;
        let i = (u.floor() as isize - 1).clamp(0, data.len() as isize - 4) as usize;
        let x = u - i as f64;
        let (a, b, c, d) = (x, x - 1.0, x - 2.0, x - 3.0);
        let w = [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0];
        (0..4).map(|k| w[k] * data[i + k]).sum()
    }

    pub fn m(&self, t: f64) -> Result<f64> {
        if t < self.split {
            Ok(self.interp(&self.grid.m, t.max(0.0)))
        } else {
            eval_m(&self.pot, t)
        }
    }

    pub fn v(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        if t < self.split {
            Ok(self.interp(self.grid.v.as_ref().expect("grid built with V"), t))
        } else {
            eval_v(&self.pot, t)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    Volterra,
    Fourier,
}

/// `K` and `K̇` on a uniform grid with the asymptotic law `K ≈ c_half t^{−1/2} + C_K t^{−3/2}`
/// used past the horizon.
#[derive(Clone, Debug, Serialize)]
pub struct MemoryKernel {
    pub method: KernelMethod,
    pub step: f64,
    pub horizon: f64,
    pub z: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub derivative: Vec<f64>,
    /// `M` on the same grid.
    #[serde(skip)]
    pub correlation: Vec<f64>,
    /// `1/(4Zπ^{5/2})`; absent when `Z = 0`.
    pub c_half: Option<f64>,
    /// Coefficient of the `t^{−3/2}` correction, fitted on the last decade of the grid.
    pub c_k: Option<f64>,
    /// Largest change of the reported values under step halving on `[0, min(100, horizon)]`.
    pub halving_change: f64,
    /// `sup |K|` on the grid.
    pub max_abs: f64,
}

/// One trapezoidal product-integration run of the kernel equation on `M` sampled at step `h`;
/// returns `(K, K̇)`.
pub fn trapezoid_k_run(m: &[f64], z: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = m.len();
    let mut kd = vec![0.0; n];
    let mut k_prev = 1.0;
    let mut kd_prev = 0.0;
    let lhs = 1.0 + 0.25 * z * h * h * m[0];
    let mut conv = HistoryConvolver::new(m);
    let k = conv.run(n, &mut |i, c| {
        if i == 0 {
            return 1.0;
        }
        let hist = c - 0.5 * m[i] * 1.0;
        let ki = (k_prev + 0.5 * h * kd_prev - 0.5 * z * h * h * hist) / lhs;
        let kdi = -z * h * (hist + 0.5 * m[0] * ki);
        kd[i] = kdi;
        k_prev = ki;
        kd_prev = kdi;
        ki
    });
    (k, kd)
}

fn richardson(fine: &[f64], coarse: &[f64]) -> Vec<f64> {
    coarse.iter().enumerate().map(|(i, c)| (4.0 * fine[2 * i] - c) / 3.0).collect()
}

/// Solve the kernel equation on `[0, horizon]` with steps `h`, `h/2`, `h/4`, report the
/// Richardson combination of the two finer runs and the change against the coarser pair.
///
/// Fails with [`Error::StepTooCoarse`] when that change exceeds [`HALVING_LIMIT`].
pub fn solve_k_volterra(
    pot: &RadialPotential,
    constants: &CouplingConstants,
    horizon: f64,
    step: f64,
) -> Result<MemoryKernel> {
    solve_k_volterra_with_limit(pot, constants, horizon, step, HALVING_LIMIT)
}

/// As [`solve_k_volterra`] with a caller-chosen halving limit, for consumers whose own
/// discretization error dominates.
pub fn solve_k_volterra_with_limit(
    pot: &RadialPotential,
    constants: &CouplingConstants,
    horizon: f64,
    step: f64,
    limit: f64,
) -> Result<MemoryKernel> {
    if !(horizon > 0.0) || !(step > 0.0) || step > horizon {
        return Err(Error::InvalidArgument(format!("need 0 < step <= horizon, got {step}, {horizon}")));
    }
    let n = (horizon / step).round() as usize;
    if 4 * n + 1 > MAX_STEPS {
        return Err(Error::CostGuard(format!("{} grid points exceed {MAX_STEPS}", 4 * n + 1)));
    }
    let grid = CorrelationGrid::new(pot, step / 4.0, 4 * n + 1, false)?;
    solve_k_on_grid(&grid, constants, n, limit)
}

/// As [`solve_k_volterra_with_limit`], reusing a correlation grid of step `h/4` and `4n+1` points.
pub fn solve_k_on_grid(grid: &CorrelationGrid, constants: &CouplingConstants, n: usize, limit: f64) -> Result<MemoryKernel> {
    let z = constants.z();
    let h = grid.step * 4.0;
    if grid.len() < 4 * n + 1 {
        return Err(Error::InvalidArgument("correlation grid too short".into()));
    }
    let m4 = &grid.m[..4 * n + 1];
    let m2: Vec<f64> = m4.iter().step_by(2).copied().collect();
    let m1: Vec<f64> = m4.iter().step_by(4).copied().collect();
    let (k4, d4) = trapezoid_k_run(m4, z, h / 4.0);
    let (k2, d2) = trapezoid_k_run(&m2, z, h / 2.0);
    let (k1, _) = trapezoid_k_run(&m1, z, h);
    let fine = richardson(&k4, &k2); // step h/2
    let coarse = richardson(&k2, &k1); // step h
    let dfine = richardson(&d4, &d2);

    let check_to = ((100.0f64).min(n as f64 * h) / h).round() as usize;
    let halving_change = (0..=check_to).map(|i| (fine[2 * i] - coarse[i]).abs()).fold(0.0, f64::max);
    if !(halving_change <= limit) {
        return Err(Error::StepTooCoarse { change: halving_change, limit });
    }

    let horizon = n as f64 * h;
    let c_half = (z > 0.0).then(|| tail_amplitude() / z);
    let c_k = c_half.and_then(|c| fit_correction(&fine, h / 2.0, c));
    let max_abs = fine.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let correlation = m2;
    Ok(MemoryKernel {
        method: KernelMethod::Volterra,
        step: h / 2.0,
        horizon,
        z,
        values: fine,
        derivative: dfine,
        correlation,
        c_half,
        c_k,
        halving_change,
        max_abs,
    })
}

/// Least-squares `C_K` in `K − c_half t^{−1/2} ≈ C_K t^{−3/2}` on the last decade.
fn fit_correction(k: &[f64], h: f64, c_half: f64) -> Option<f64> {
    let horizon = (k.len() - 1) as f64 * h;
    if horizon < 100.0 {
        return None;
    }
    let start = ((0.1 * horizon) / h).ceil() as usize;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in k.iter().enumerate().skip(start) {
        let t = i as f64 * h;
        let basis = t.powf(-1.5);
        num += (v - c_half / t.sqrt()) * basis;
        den += basis * basis;
    }
    Some(num / den)
}

impl MemoryKernel {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.step)
    }

    fn interp(&self, data: &[f64], t: f64) -> f64 {
        let u = t / self.step;
        let n = data.len();
        let i = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let x = u - i as f64;
        let (a, b, c, d) = (x, x - 1.0, x - 2.0, x - 3.0);
        let w = [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0];
        (0..4).map(|k| w[k] * data[i + k]).sum()
    }

    /// `K(t)`; zero for `t < 0`, the asymptotic law past the horizon.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if t > self.horizon {
            return match self.c_half {
                Some(c) => c / t.sqrt() + self.c_k.unwrap_or(0.0) * t.powf(-1.5),
                None => 1.0,
            };
        }
        self.interp(&self.values, t)
    }

    /// `K̇(t)`.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if t > self.horizon {
            return match self.c_half {
                Some(c) => -0.5 * c * t.powf(-1.5) - 1.5 * self.c_k.unwrap_or(0.0) * t.powf(-2.5),
                None => 0.0,
            };
        }
        self.interp(&self.derivative, t)
    }

    /// `I(t) = Z ∫₀ᵗ K(t−s) M(s) ds` on the grid, by trapezoidal FFT convolution at
    /// steps `h` and `2h` with a Richardson correction (interpolated onto odd nodes).
    pub fn i_series(&self) -> Vec<f64> {
        let fine = trapezoid_convolution(&self.values, &self.correlation, self.step);
        let k2: Vec<f64> = self.values.iter().step_by(2).copied().collect();
        let m2: Vec<f64> = self.correlation.iter().step_by(2).copied().collect();
        let coarse = trapezoid_convolution(&k2, &m2, 2.0 * self.step);
        let corr: Vec<f64> = coarse.iter().enumerate().map(|(j, c)| (fine[2 * j] - c) / 3.0).collect();
        fine.iter()
            .enumerate()
            .map(|(i, f)| {
                let c = if i % 2 == 0 {
                    corr[i / 2]
                } else if i / 2 + 1 < corr.len() {
                    0.5 * (corr[i / 2] + corr[i / 2 + 1])
                } else {
                    corr[i / 2]
                };
                self.z * (f + c)
            })
            .collect()
    }

    /// `|K(t)| ≤ 1.05` on the grid.
    pub fn bounded(&self) -> bool {
        self.max_abs <= 1.05
    }

    /// CSV with columns `t, K, ZK t^{1/2}, I (1+t)^{3/2}`, every `stride`-th grid point.
    pub fn write_csv(&self, out: &mut dyn Write, stride: usize) -> std::io::Result<()> {
        let i = self.i_series();
        writeln!(out, "t,K,ZK_sqrt_t,I_scaled")?;
        for (n, t) in self.times().enumerate().step_by(stride.max(1)) {
            let k = self.values[n];
            writeln!(out, "{t:e},{k:e},{:e},{:e}", self.z * k * t.sqrt(), i[n] * (1.0 + t).powf(1.5))?;
        }
        Ok(())
    }
}

/// `I(t)` by interpolating the convolution series of the kernel grid.
pub fn conv_i(kernel: &MemoryKernel, t: f64) -> Result<f64> {
    if t < 0.0 || t > kernel.horizon {
        return Err(Error::OutOfRange(format!("t = {t} outside [0, {}]", kernel.horizon)));
    }
    let series = kernel.i_series();
    Ok(kernel.interp(&series, t))
}

/// The spectrum `S(k) = 1/(ik + Z G(k+i0))`, so that `K̂ = −S`.
pub fn kernel_spectrum(pot: &RadialPotential, z: f64, k: f64, spec: &QuadratureSpec) -> Complex64 {
    match eval_g_with(pot, k, spec) {
        Ok(g) => 1.0 / (Complex64::new(0.0, k) + g * z),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}

/// Spectrum truncation radius in `ρ = √|k|`. `Re S` carries `|Ŵ(√(2k))|²`, which for
/// the Gaussian is `e^{−2σ²k}`, so `k ≤ 20/σ²` leaves nothing above round-off.
fn fourier_radius(pot: &RadialPotential) -> f64 {
    match pot.gaussian_sigma() {
        Some(s) => 20f64.sqrt() / s,
        None => pot.cutoff() / 2f64.sqrt(),
    }
}

/// `K(t) = −(1/π) ∫ Re S(k) cos(kt) dk` for `t > 0`.
pub fn invert_k_fourier(pot: &RadialPotential, constants: &CouplingConstants, t: f64) -> Result<f64> {
    let z = constants.z();
    if !(z > 0.0) {
        return Err(Error::InvalidArgument("Fourier route needs Z > 0".into()));
    }
    let gspec = QuadratureSpec::with_target(1e-9);
    let spectrum = |k: f64| kernel_spectrum(pot, z, k, &gspec);
    let spec = QuadratureSpec { target: 1e-8, radius: fourier_radius(pot), ..QuadratureSpec::default() };
    Ok(fourier_inversion(&spectrum, t, &spec)?.value)
}

/// The full transform `−(1/2π) ∫ S(k) e^{−ikt} dk` at any `t ≠ 0`; vanishes for `t < 0`.
pub fn causal_k_fourier(pot: &RadialPotential, constants: &CouplingConstants, t: f64) -> Result<f64> {
    let z = constants.z();
    if !(z > 0.0) {
        return Err(Error::InvalidArgument("Fourier route needs Z > 0".into()));
    }
    let gspec = QuadratureSpec::with_target(1e-11);
    let spectrum = |k: f64| kernel_spectrum(pot, z, k, &gspec);
    let spec = QuadratureSpec { target: 1e-7, radius: fourier_radius(pot), ..QuadratureSpec::default() };
    Ok(causal_inversion(&spectrum, t, &spec)?.value)
}
