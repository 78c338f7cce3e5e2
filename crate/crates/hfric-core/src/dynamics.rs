//! Effective particle dynamics: the linearized scalar law, the nonlinear memory law
//! with its forcing split `B₀ + B₁ + B₂`, the fixed-point reformulation on `[T, ∞)`,
//! and decay-exponent extraction.
//!
//! With `Y_s = X_s − X_t` and the displacement kernel `H(τ, Y) = a I + b Y Yᵀ` the law reads
//!
//! `Ṗ_t = B₀ + 2ν Re[a(t, X₀−X_t)](X₀−X_t) + 2ν ∫₀ᵗ Re[H(t−s, Y_s)] P_s ds`,
//!
//! which reduces to `Ṗ = L(P)` at `Y = 0` because `a(τ, 0) = −M_c(τ)/3`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{eval_ab_weight, CouplingConstants, DisplacementSeries, RadialPotential, RadialWeight, Vec3};
use crate::memory_kernel::{solve_k_volterra_with_limit, CorrelationGrid, MemoryKernel};
use crate::volterra::{trapezoid_convolution, HistoryConvolver};

/// Largest grid size for the linearized solve (horizon 10³ at step 10⁻²).
pub const LINEAR_MAX_STEPS: usize = 100_000;

/// Largest grid size for the nonlinear and fixed-point solvers, whose memory sums are `O(N²)`.
pub const NONLINEAR_MAX_STEPS: usize = 40_000;

/// `|P|` above this multiple of the data size aborts a run.
pub const BLOW_UP_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub t: f64,
    pub x: Vec3,
    pub p: Vec3,
}

/// Gaussian initial fluctuation `β₀(x) = A e^{−|x−c|²/(2w²)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldInit {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec3,
}

impl Default for FieldInit {
    fn default() -> Self {
        Self { amplitude: 1e-2, width: 1.0, center: [0.0; 3] }
    }
}

impl FieldInit {
    pub fn zero() -> Self {
        Self { amplitude: 0.0, width: 1.0, center: [0.0; 3] }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// `‖⟨x⟩⁴ β₀‖₂`, exactly: `|β₀|²` is a Gaussian of variance `w²/2` per axis, so
    /// `|x|²/(w²/2)` is noncentral χ² with three degrees of freedom.
    pub fn weighted_norm(&self) -> f64 {
        let s2 = 0.5 * self.width * self.width;
        let lam = dot(&self.center, &self.center) / s2;
        let k = 3.0;
        // raw moments μ'_n of χ'²(k, λ)
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let mut mu = [1.0f64; 5];
        for n in 1..=4 {
            let mut v = 2f64.powi(n as i32 - 1) * fact(n - 1) * (k + n as f64 * lam);
            for j in 1..n {
                v += fact(n - 1) * 2f64.powi(j as i32 - 1) / fact(n - j) * (k + j as f64 * lam) * mu[n - j];
            }
            mu[n] = v;
        }
        let binom = [1.0, 4.0, 6.0, 4.0, 1.0];
        let mean: f64 = (0..=4).map(|n| binom[n] * s2.powi(n as i32) * mu[n]).sum();
        let mass = (std::f64::consts::PI * self.width * self.width).powf(1.5);
        self.amplitude.abs() * (mass * mean).sqrt()
    }
}

/// One step's force, split as `Ṗ = L(P) + B₀ + B₁ + B₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Forcing {
    pub l_term: Vec3,
    pub b0: Vec3,
    pub b1: Vec3,
    pub b2: Vec3,
}

impl Forcing {
    pub fn total(&self) -> Vec3 {
        std::array::from_fn(|i| self.l_term[i] + self.b0[i] + self.b1[i] + self.b2[i])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    PredictorCorrector,
    FixedPoint,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub step: f64,
    pub horizon: f64,
    pub method: SolveMethod,
    pub states: Vec<ParticleState>,
    /// Empty for fixed-point trajectories, whose force is never formed pointwise.
    pub forcing: Vec<Forcing>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn p_norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| norm(&s.p)).collect()
    }

    pub fn final_state(&self) -> &ParticleState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// `sup |P_t| t^{1/2+δ}` over grid times in `[from, horizon]`.
    pub fn weighted_sup(&self, delta: f64, from: f64) -> f64 {
        self.states
            .iter()
            .filter(|s| s.t >= from)
            .map(|s| norm(&s.p) * s.t.powf(0.5 + delta))
            .fold(0.0, f64::max)
    }

    /// Columns `t, X1..3, P1..3, |P|, B0_1..3, B1_1..3, B2_1..3, L1..3`, every `stride`-th step.
    pub fn write_csv(&self, out: &mut dyn Write, stride: usize) -> std::io::Result<()> {
        writeln!(
            out,
            "t,X1,X2,X3,P1,P2,P3,P_norm,B0_1,B0_2,B0_3,B1_1,B1_2,B1_3,B2_1,B2_2,B2_3,L1,L2,L3"
        )?;
        for (i, s) in self.states.iter().enumerate().step_by(stride.max(1)) {
            let f = self.forcing.get(i).copied().unwrap_or_default();
            let mut row = vec![s.t];
            row.extend(s.x);
            row.extend(s.p);
            row.push(norm(&s.p));
            for v in [f.b0, f.b1, f.b2, f.l_term] {
                row.extend(v);
            }
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn axpy(acc: &mut Vec3, s: f64, v: &Vec3) {
    for i in 0..3 {
        acc[i] += s * v[i];
    }
}

// ---------------------------------------------------------------------------------------
// linearized law

/// Solution of `q̇ = Z M(t) ∫₀ᵗ q − Z ∫₀ᵗ M(t−s) q_s ds`, `q₀ = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct LinearSolution {
    pub step: f64,
    pub horizon: f64,
    #[serde(skip)]
    pub q: Vec<f64>,
    #[serde(skip)]
    pub q_dot: Vec<f64>,
    /// Largest change of the reported values against the coarser Richardson pair.
    pub halving_change: f64,
    /// Observed order of the underlying trapezoidal scheme, from three step sizes.
    pub order: f64,
}

impl LinearSolution {
    pub fn times(&self) -> Vec<f64> {
        (0..self.q.len()).map(|i| i as f64 * self.step).collect()
    }
}

/// One trapezoidal product-integration run of the linearized law; returns `(q, q̇)`.
///
/// With `Q_m = ∫₀^{t_m} q` and `c_m = Σ_{j<m} M_{m−j} q_j` the trapezoid step is implicit
/// only through the `j = m` terms, which are solved for in closed form.
pub fn trapezoid_q_run(m: &[f64], z: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = m.len();
    let mut qd = vec![0.0; n];
    let (mut q_prev, mut f_prev, mut big_q) = (1.0, 0.0, 0.0);
    let mut conv = HistoryConvolver::new(m);
    let q = conv.run(n, &mut |i, c| {
        if i == 0 {
            return 1.0;
        }
        let hist = c - 0.5 * m[i] * 1.0;
        let lhs = 1.0 - 0.25 * z * h * h * (m[i] - m[0]);
        let rhs = q_prev
            + 0.5 * h * f_prev
            + 0.5 * h * (z * m[i] * (big_q + 0.5 * h * q_prev) - z * h * hist);
        let qi = rhs / lhs;
        big_q += 0.5 * h * (q_prev + qi);
        let fi = z * m[i] * big_q - z * h * (hist + 0.5 * m[0] * qi);
        qd[i] = fi;
        q_prev = qi;
        f_prev = fi;
        qi
    });
    (q, qd)
}

fn richardson(fine: &[f64], coarse: &[f64]) -> Vec<f64> {
    coarse.iter().enumerate().map(|(i, c)| (4.0 * fine[2 * i] - c) / 3.0).collect()
}

/// Solve the linearized law on `[0, horizon]` at steps `h`, `h/2`, `h/4` and report the
/// Richardson combination of the two finer runs on the `h/2` grid.
pub fn solve_linearized(
    pot: &RadialPotential,
    constants: &CouplingConstants,
    horizon: f64,
    step: f64,
) -> Result<LinearSolution> {
    if !(horizon > 0.0) || !(step > 0.0) || step > horizon {
        return Err(Error::InvalidArgument(format!("need 0 < step <= horizon, got {step}, {horizon}")));
    }
    let n = (horizon / step).round() as usize;
    if n > LINEAR_MAX_STEPS {
        return Err(Error::CostGuard(format!("{n} steps exceed {LINEAR_MAX_STEPS}")));
    }
    let grid = CorrelationGrid::new(pot, step / 4.0, 4 * n + 1, false)?;
    solve_linearized_on_grid(&grid, constants, n)
}

/// As [`solve_linearized`], on a correlation grid of step `h/4` with at least `4n+1` points.
pub fn solve_linearized_on_grid(grid: &CorrelationGrid, constants: &CouplingConstants, n: usize) -> Result<LinearSolution> {
    if grid.len() < 4 * n + 1 {
        return Err(Error::InvalidArgument("correlation grid too short".into()));
    }
    let z = constants.z();
    let h = 4.0 * grid.step;
    let m4 = &grid.m[..4 * n + 1];
    let m2: Vec<f64> = m4.iter().step_by(2).copied().collect();
    let m1: Vec<f64> = m4.iter().step_by(4).copied().collect();
    let (q4, d4) = trapezoid_q_run(m4, z, h / 4.0);
    let (q2, d2) = trapezoid_q_run(&m2, z, h / 2.0);
    let (q1, _) = trapezoid_q_run(&m1, z, h);
    let fine = richardson(&q4, &q2);
    let coarse = richardson(&q2, &q1);
    let halving_change = (0..=n).map(|i| (fine[2 * i] - coarse[i]).abs()).fold(0.0, f64::max);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for i in 0..=n {
        e1 = e1.max((q1[i] - q2[2 * i]).abs());
        e2 = e2.max((q2[2 * i] - q4[4 * i]).abs());
    }
    let order = if e2 > 0.0 { (e1 / e2).log2() } else { f64::INFINITY };
    Ok(LinearSolution {
        step: h / 2.0,
        horizon: n as f64 * h,
        q: fine,
        q_dot: richardson(&d4, &d2),
        halving_change,
        order,
    })
}

// ---------------------------------------------------------------------------------------
// nonlinear law

/// Everything a nonlinear run needs besides its own history.
#[derive(Clone, Debug)]
pub struct DynamicsConfig {
    pub potential: RadialPotential,
    pub constants: CouplingConstants,
    pub x0: Vec3,
    pub p0: Vec3,
    pub field: FieldInit,
    pub horizon: f64,
    pub step: f64,
    /// When set, `|P₀|` and `‖⟨x⟩⁴β₀‖₂` must not exceed it.
    pub small_data: Option<f64>,
}

impl DynamicsConfig {
    /// Small-data defaults: `|P₀| = 10⁻²` along `ẑ`, Gaussian `β₀` of amplitude `10⁻²` at the origin.
    pub fn small_data(horizon: f64, step: f64) -> Self {
        Self {
            potential: RadialPotential::default(),
            constants: CouplingConstants::new(1.0).expect("positive coupling"),
            x0: [0.0; 3],
            p0: [0.0, 0.0, 1e-2],
            field: FieldInit::default(),
            horizon,
            step,
            small_data: None,
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.horizon >= self.step) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < step <= horizon, got {}, {}",
                self.step, self.horizon
            )));
        }
        if self.steps() > NONLINEAR_MAX_STEPS {
            return Err(Error::CostGuard(format!("{} steps exceed {NONLINEAR_MAX_STEPS}", self.steps())));
        }
        if !(self.field.width > 0.0) {
            return Err(Error::InvalidArgument("field width must be > 0".into()));
        }
        if let Some(eps) = self.small_data {
            let p = norm(&self.p0);
            let b = self.field.weighted_norm();
            if p > eps || b > eps {
                return Err(Error::InvalidArgument(format!(
                    "data exceed the small-data bound {eps}: |P0| = {p}, weighted field norm = {b}"
                )));
            }
        }
        Ok(())
    }

    fn blow_up_bound(&self) -> f64 {
        BLOW_UP_FACTOR * norm(&self.p0).max(self.field.amplitude.abs())
    }
}

/// Displacement kernels at every lag of a uniform grid, with quadrature fallback
/// past each series' radius.
#[derive(Clone, Debug)]
pub struct ForceContext {
    pub step: f64,
    nu: f64,
    z: f64,
    field: FieldInit,
    weight: RadialWeight,
    lags: Vec<DisplacementSeries>,
    packet_weight: Option<RadialWeight>,
    packet: Vec<DisplacementSeries>,
    table: LagTable,
    /// `M(kh)`, read off the series: `a(τ, 0) = −M_c(τ)/3`.
    m: Vec<f64>,
}

/// The real `(a, b)` coefficients of every lag packed contiguously, so history sums
/// walk memory in order.
#[derive(Clone, Debug)]
struct LagTable {
    offsets: Vec<usize>,
    coef: Vec<[f64; 2]>,
    r2_max: Vec<f64>,
}

impl LagTable {
    fn new(lags: &[DisplacementSeries]) -> Self {
        let mut offsets = Vec::with_capacity(lags.len() + 1);
        let mut coef = Vec::new();
        offsets.push(0);
        for s in lags {
            let (a, b) = s.re_coefficients();
            coef.extend((0..a.len().max(b.len())).map(|n| {
                [a.get(n).copied().unwrap_or(0.0), b.get(n).copied().unwrap_or(0.0)]
            }));
            offsets.push(coef.len());
        }
        let r2_max = lags.iter().map(|s| s.r_max() * s.r_max()).collect();
        Self { offsets, coef, r2_max }
    }

    #[inline]
    fn a0(&self, k: usize) -> f64 {
        self.coef[self.offsets[k]][0]
    }

    /// `(Re a(s) − Re a(0), Re b(s))` at lag `k`, or `None` past the series radius.
    #[inline]
    fn delta(&self, k: usize, s: f64) -> Option<(f64, f64)> {
        if s > self.r2_max[k] {
            return None;
        }
        let c = &self.coef[self.offsets[k]..self.offsets[k + 1]];
        let mut da = 0.0;
        let mut b = c[0][1];
        let mut pw = 1.0;
        let mut quiet = 0;
        for &[ca, cb] in &c[1..] {
            pw *= s;
            let (ta, tb) = (ca * pw, cb * pw);
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
        Some((da, b))
    }
}

/// Requested series radius; larger displacements fall back to quadrature.
const SERIES_RADIUS: f64 = 2.0;

impl ForceContext {
    pub fn new(cfg: &DynamicsConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.steps();
        let h = cfg.step;
        let weight = RadialWeight::w_sq(&cfg.potential);
        let lags = (0..=n)
            .map(|k| DisplacementSeries::for_weight(&weight, 0, k as f64 * h, SERIES_RADIUS))
            .collect::<Result<Vec<_>>>()?;
        let (packet_weight, packet) = if cfg.field.is_zero() {
            (None, Vec::new())
        } else {
            let pw = RadialWeight::w_times_packet(&cfg.potential, cfg.field.width);
            let series = (0..=n)
                .map(|k| DisplacementSeries::for_weight(&pw, 1, k as f64 * h, SERIES_RADIUS))
                .collect::<Result<Vec<_>>>()?;
            (Some(pw), series)
        };
        let m = lags.iter().map(|s| -3.0 * s.re_a(0.0)).collect();
        let table = LagTable::new(&lags);
        Ok(Self {
            step: h,
            nu: cfg.constants.nu(),
            z: cfg.constants.z(),
            field: cfg.field,
            weight,
            lags,
            packet_weight,
            packet,
            table,
            m,
        })
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// `M` on the grid.
    pub fn correlation(&self) -> &[f64] {
        &self.m
    }

    /// `(Re a, Re b)` at lag index `k` and `s = |Y|²`.
    fn ab(&self, k: usize, s: f64) -> Result<(f64, f64)> {
        if let Some((da, b)) = self.table.delta(k, s) {
            Ok((self.table.a0(k) + da, b))
        } else {
            let series = &self.lags[k];
            let (a, b) = eval_ab_weight(&self.weight, 0, series.tau(), s.sqrt())?;
            Ok((a.re, b.re))
        }
    }

    /// `Re[H(τ_k, Y) − H(τ_k, 0)]·P`.
    fn hess_delta(&self, k: usize, y: &Vec3, p: &Vec3) -> Result<Vec3> {
        let s = dot(y, y);
        let (da, b) = match self.table.delta(k, s) {
            Some(v) => v,
            None => {
                let series = &self.lags[k];
                let (a, b) = eval_ab_weight(&self.weight, 0, series.tau(), s.sqrt())?;
                (a.re - series.re_a(0.0), b.re)
            }
        };
        let yp = dot(y, p);
        Ok(std::array::from_fn(|i| da * p[i] + b * yp * y[i]))
    }

    fn hess(&self, k: usize, y: &Vec3, p: &Vec3) -> Result<Vec3> {
        let (a, b) = self.ab(k, dot(y, y))?;
        let yp = dot(y, p);
        Ok(std::array::from_fn(|i| a * p[i] + b * yp * y[i]))
    }

    /// `B₀ = ν Re⟨∇W^{X}, e^{iΔt/2} β₀⟩ = ν A w³ Re[a_packet(t, |c−X|²)] (c−X)` at lag index `k`.
    pub fn b0(&self, k: usize, x: &Vec3) -> Result<Vec3> {
        let Some(pw) = &self.packet_weight else {
            return Ok([0.0; 3]);
        };
        let y = sub(&self.field.center, x);
        let s = dot(&y, &y);
        let series = &self.packet[k];
        let a = if s <= series.r_max() * series.r_max() {
            series.re_a(s)
        } else {
            eval_ab_weight(pw, 1, series.tau(), s.sqrt())?.0.re
        };
        let scale = self.nu * self.field.amplitude * self.field.width.powi(3) * a;
        Ok([scale * y[0], scale * y[1], scale * y[2]])
    }

    /// The force at step `m` for a candidate state `(x, p)` given the history `0..m`.
    fn force(&self, hist: &[ParticleState], m: usize, x: &Vec3, p: &Vec3) -> Result<Forcing> {
        if self.nu == 0.0 {
            // every term carries ν (Z = 2ν/3 included)
            return Ok(Forcing { l_term: [0.0; 3], b0: [0.0; 3], b1: [0.0; 3], b2: [0.0; 3] });
        }
        let h = self.step;
        let two_nu = 2.0 * self.nu;
        let x0 = &hist[0].x;
        // T₁ = 2ν Re[a(t, |X₀−X|²)] (X₀−X)
        let y0 = sub(x0, x);
        let (a_t, _) = self.ab(m, dot(&y0, &y0))?;
        let t1: Vec3 = std::array::from_fn(|i| two_nu * a_t * y0[i]);
        // memory: 2ν h Σ_j w_j Re H(t_m − t_j, X_j − X) P_j, trapezoid weights
        let mut mem = [0.0; 3];
        let mut lin = [0.0; 3];
        for (j, s) in hist.iter().enumerate().take(m) {
            let w = if j == 0 { 0.5 } else { 1.0 };
            let y = sub(&s.x, x);
            let hp = self.hess(m - j, &y, &s.p)?;
            axpy(&mut mem, w, &hp);
            axpy(&mut lin, w * self.m[m - j], &s.p);
        }
        let hp = self.hess(0, &[0.0; 3], p)?;
        axpy(&mut mem, 0.5, &hp);
        axpy(&mut lin, 0.5 * self.m[0], p);
        let mem: Vec3 = std::array::from_fn(|i| two_nu * h * mem[i]);
        // L(P) = Z M(t) (X − X₀) − Z ∫ M(t−s) P_s ds
        let disp = sub(x, x0);
        let l_term: Vec3 = std::array::from_fn(|i| self.z * self.m[m] * disp[i] - self.z * h * lin[i]);
        let b1: Vec3 = std::array::from_fn(|i| t1[i] - self.z * self.m[m] * disp[i]);
        let b2: Vec3 = std::array::from_fn(|i| mem[i] + self.z * h * lin[i]);
        Ok(Forcing { l_term, b0: self.b0(m, x)?, b1, b2 })
    }
}

/// `(B₀, B₁, B₂)` at step `m` from their history-integral definitions:
/// `B₁ = −2ν ∫₀ᵗ Re[H(t, X₀−X_s) − H(t, 0)] P_s ds`,
/// `B₂ = 2ν ∫₀ᵗ Re[H(t−s, X_s−X_t) − H(t−s, 0)] P_s ds`.
pub fn forcing_b(ctx: &ForceContext, hist: &[ParticleState], m: usize) -> Result<(Vec3, Vec3, Vec3)> {
    if hist.len() <= m || ctx.len() <= m {
        return Err(Error::OutOfRange(format!("history of {} states does not reach step {m}", hist.len())));
    }
    let h = ctx.step;
    let two_nu = 2.0 * ctx.nu;
    let x0 = &hist[0].x;
    let xt = &hist[m].x;
    let (mut b1, mut b2) = ([0.0; 3], [0.0; 3]);
    for (j, s) in hist.iter().enumerate().take(m + 1) {
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        let y1 = sub(x0, &s.x);
        let d1 = ctx.hess_delta(m, &y1, &s.p)?;
        let y2 = sub(&s.x, xt);
        let d2 = ctx.hess_delta(m - j, &y2, &s.p)?;
        axpy(&mut b1, -w, &d1);
        axpy(&mut b2, w, &d2);
    }
    if m == 0 {
        b1 = [0.0; 3];
        b2 = [0.0; 3];
    }
    let scale = two_nu * h;
    Ok((ctx.b0(m, xt)?, b1.map(|v| scale * v), b2.map(|v| scale * v)))
}

/// Integrate the nonlinear law with one AB2 predictor and one trapezoidal corrector per step.
pub fn solve_nonlinear(cfg: &DynamicsConfig) -> Result<Trajectory> {
    let ctx = ForceContext::new(cfg)?;
    solve_nonlinear_with(&ctx, cfg)
}

pub fn solve_nonlinear_with(ctx: &ForceContext, cfg: &DynamicsConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.steps();
    if ctx.len() < n + 1 || (ctx.step - cfg.step).abs() > 1e-15 * cfg.step {
        return Err(Error::InvalidArgument("force context does not match the configuration grid".into()));
    }
    let h = cfg.step;
    let bound = cfg.blow_up_bound();
    let mut states = Vec::with_capacity(n + 1);
    states.push(ParticleState { t: 0.0, x: cfg.x0, p: cfg.p0 });
    let mut forcing = Vec::with_capacity(n + 1);
    forcing.push(ctx.force(&states, 0, &cfg.x0, &cfg.p0)?);
    let mut f_prev = forcing[0].total();
    let mut f_prev2 = f_prev;
    for m in 1..=n {
        let last = states[m - 1];
        // predictor: AB2 (Euler on the first step)
        let pp: Vec3 = if m == 1 {
            std::array::from_fn(|i| last.p[i] + h * f_prev[i])
        } else {
            std::array::from_fn(|i| last.p[i] + 0.5 * h * (3.0 * f_prev[i] - f_prev2[i]))
        };
        let xp: Vec3 = std::array::from_fn(|i| last.x[i] + 0.5 * h * (last.p[i] + pp[i]));
        let fp = ctx.force(&states, m, &xp, &pp)?.total();
        // corrector: trapezoid
        let p: Vec3 = std::array::from_fn(|i| last.p[i] + 0.5 * h * (f_prev[i] + fp[i]));
        let x: Vec3 = std::array::from_fn(|i| last.x[i] + 0.5 * h * (last.p[i] + p[i]));
        let t = m as f64 * h;
        if !p.iter().all(|v| v.is_finite()) || (bound > 0.0 && norm(&p) > bound) {
            return Err(Error::BlowUp { t, p: norm(&p) });
        }
        states.push(ParticleState { t, x, p });
        let f = ctx.force(&states, m, &x, &p)?;
        f_prev2 = f_prev;
        f_prev = f.total();
        forcing.push(f);
    }
    Ok(Trajectory { step: h, horizon: n as f64 * h, method: SolveMethod::PredictorCorrector, states, forcing })
}

// ---------------------------------------------------------------------------------------
// fixed-point reformulation

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    pub trajectory: Trajectory,
    pub t_cut: f64,
    pub delta: f64,
    /// `‖P^{(n+1)} − P^{(n)}‖_{δ,T}` per iteration.
    pub update_norms: Vec<f64>,
    /// Ratios of successive update norms.
    pub ratios: Vec<f64>,
    /// `min |1 − K|` on `[T, horizon]`.
    pub min_one_minus_k: f64,
}

/// Update-norm threshold that ends the iteration.
pub const FIXED_POINT_TOL: f64 = 1e-8;

/// The update must also fall below this fraction of `‖P‖_{δ,T}`, which for small data
/// is far below the absolute threshold.
pub const FIXED_POINT_REL: f64 = 1e-8;

/// The smallest grid time after which `|K| < 0.2` holds on the whole remaining grid.
pub fn default_t_cut(kernel: &MemoryKernel) -> f64 {
    let last_big = kernel.values.iter().rposition(|v| v.abs() >= 0.2).unwrap_or(0);
    (last_big + 1) as f64 * kernel.step
}

/// Halving change accepted for `K` on a dynamics grid; the second-order dynamics
/// error at the same step is far larger.
pub const KERNEL_HALVING_LIMIT: f64 = 1e-3;

/// `M`, `V` and `K` on the dynamics grid.
pub struct FixedPointKernels {
    pub kernel: MemoryKernel,
    pub v: Vec<f64>,
}

impl FixedPointKernels {
    pub fn new(cfg: &DynamicsConfig) -> Result<Self> {
        let n = cfg.steps();
        let kernel = solve_k_volterra_with_limit(
            &cfg.potential,
            &cfg.constants,
            n as f64 * cfg.step,
            2.0 * cfg.step,
            KERNEL_HALVING_LIMIT,
        )?;
        let grid = CorrelationGrid::new(&cfg.potential, cfg.step, n + 1, true)?;
        Ok(Self { kernel, v: grid.v.expect("grid built with V") })
    }
}

/// Solve directly on `[0, T]`, then iterate `P ← Υ(P) + G` on `[T, horizon]` in the
/// `‖·‖_{δ,T}` norm until the update falls below [`FIXED_POINT_TOL`] and [`FIXED_POINT_REL`]` · ‖P‖`.
///
/// On the grid, `(1 − K_t) P_t = Z (K * MQ)_t + Z K_t (Q_t ∫₀ᵗM − ∫₀ᵗMQ) + Z K_t ((V * P)_t − V_t Q_t)
/// + (K * F)_t − K_t ∫₀ᵗF`, with `Q = ∫P` and all integrals trapezoidal.
pub fn fixed_point_solve(
    ctx: &ForceContext,
    kernels: &FixedPointKernels,
    cfg: &DynamicsConfig,
    t_cut: Option<f64>,
    delta: f64,
) -> Result<FixedPointReport> {
    cfg.validate()?;
    let n = cfg.steps();
    let h = cfg.step;
    let kernel = &kernels.kernel;
    if kernel.values.len() < n + 1 || (kernel.step - h).abs() > 1e-12 * h {
        return Err(Error::InvalidArgument("kernel grid does not match the configuration".into()));
    }
    let t_cut = t_cut.unwrap_or_else(|| default_t_cut(kernel));
    let m_cut = (t_cut / h).round() as usize;
    if m_cut == 0 || m_cut >= n {
        return Err(Error::InvalidArgument(format!("T = {t_cut} must lie inside (0, horizon)")));
    }
    let k: Vec<f64> = kernel.values[..=n].to_vec();
    let min_one_minus_k = k[m_cut..].iter().map(|v| (1.0 - v).abs()).fold(f64::INFINITY, f64::min);
    if min_one_minus_k < 0.5 {
        return Err(Error::InvalidArgument(format!("1 − K falls to {min_one_minus_k} on [T, horizon]")));
    }
    let z = cfg.constants.z();
    let m = ctx.correlation()[..=n].to_vec();
    let v = &kernels.v[..=n];

    let head_cfg = DynamicsConfig { horizon: m_cut as f64 * h, ..cfg.clone() };
    let head = solve_nonlinear_with(ctx, &head_cfg)?;
    let mut states = head.states.clone();
    let last = *states.last().expect("head run has states");
    for i in m_cut + 1..=n {
        states.push(ParticleState { t: i as f64 * h, x: last.x, p: [0.0; 3] });
    }

    let cumulative = |f: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for i in 1..f.len() {
            out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
        }
        out
    };
    let cm = cumulative(&m);
    let weight = |i: usize| (i as f64 * h).powf(0.5 + delta);
    let mut force = vec![[0.0; 3]; n + 1];
    for (i, f) in force.iter_mut().enumerate().take(m_cut + 1) {
        let (b0, b1, b2) = forcing_b(ctx, &states[..=i], i)?;
        *f = std::array::from_fn(|c| b0[c] + b1[c] + b2[c]);
    }
    let mut update_norms = Vec::new();
    let mut ratios = Vec::new();
    for _iter in 0..200 {
        // X from P, then the forcing along the current iterate
        for i in m_cut + 1..=n {
            let (a, b) = (states[i - 1], states[i]);
            states[i].x = std::array::from_fn(|c| a.x[c] + 0.5 * h * (a.p[c] + b.p[c]));
        }
        for i in m_cut + 1..=n {
            let (b0, b1, b2) = forcing_b(ctx, &states[..=i], i)?;
            force[i] = std::array::from_fn(|c| b0[c] + b1[c] + b2[c]);
        }
        let mut next = vec![[0.0; 3]; n + 1];
        for c in 0..3 {
            let p: Vec<f64> = states.iter().map(|s| s.p[c]).collect();
            let f: Vec<f64> = force.iter().map(|v| v[c]).collect();
            let q = cumulative(&p);
            let mq: Vec<f64> = m.iter().zip(&q).map(|(a, b)| a * b).collect();
            let cmq = cumulative(&mq);
            let cf = cumulative(&f);
            let k_mq = trapezoid_convolution(&k, &mq, h);
            let v_p = trapezoid_convolution(v, &p, h);
            let k_f = trapezoid_convolution(&k, &f, h);
            for i in m_cut + 1..=n {
                let rhs = z * k_mq[i]
                    + z * k[i] * (q[i] * cm[i] - cmq[i])
                    + z * k[i] * (v_p[i] - v[i] * q[i])
                    + k_f[i]
                    - k[i] * cf[i];
                next[i][c] = rhs / (1.0 - k[i]);
            }
        }
        let (mut update, mut size) = (0.0f64, 0.0f64);
        for i in m_cut + 1..=n {
            update = update.max(norm(&sub(&next[i], &states[i].p)) * weight(i));
            size = size.max(norm(&next[i]) * weight(i));
            states[i].p = next[i];
        }
        if let Some(prev) = update_norms.last() {
            if *prev > 0.0 {
                ratios.push(update / prev);
            }
        }
        update_norms.push(update);
        if update == 0.0 || (update < FIXED_POINT_TOL && update < FIXED_POINT_REL * size) {
            for i in m_cut + 1..=n {
                let (a, b) = (states[i - 1], states[i]);
                states[i].x = std::array::from_fn(|c| a.x[c] + 0.5 * h * (a.p[c] + b.p[c]));
            }
            if let Some(r) = ratios.iter().copied().find(|r| *r >= 1.0) {
                return Err(Error::ContractionFailure { ratio: r });
            }
            return Ok(FixedPointReport {
                trajectory: Trajectory {
                    step: h,
                    horizon: n as f64 * h,
                    method: SolveMethod::FixedPoint,
                    states,
                    forcing: Vec::new(),
                },
                t_cut: m_cut as f64 * h,
                delta,
                update_norms,
                ratios,
                min_one_minus_k,
            });
        }
        if ratios.len() >= 3 && ratios[ratios.len() - 3..].iter().all(|r| *r >= 1.0) {
            return Err(Error::ContractionFailure { ratio: *ratios.last().unwrap() });
        }
    }
    Err(Error::ContractionFailure { ratio: ratios.last().copied().unwrap_or(f64::NAN) })
}

/// The fixed-point and direct routes compared at steps `h` and `h/2`.
///
/// Both are second order and share no discretization, so their raw difference is an
/// `O(h²)` mismatch; the comparison is made between their Richardson extrapolations
/// `(4P_{h/2} − P_h)/3` on the coarse grid.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointAgreement {
    pub step: f64,
    pub t_cut: f64,
    pub delta: f64,
    /// `sup_{t≥T} |P_fp − P_direct| / sup_{t≥T} |P_direct|` at `h` and at `h/2`.
    pub raw_relative: [f64; 2],
    /// The same for the extrapolated pairs.
    pub extrapolated_relative: f64,
    /// Time of the largest extrapolated deviation.
    pub worst_time: f64,
    /// Update-norm ratios of the coarse and fine iterations.
    pub ratios: [Vec<f64>; 2],
    pub iterations: [usize; 2],
    /// The extrapolated fixed-point trajectory on the coarse grid.
    pub trajectory: Trajectory,
}

fn relative_deviation(a: &[ParticleState], b: &[ParticleState], from: f64) -> (f64, f64) {
    let (mut dev, mut scale, mut at) = (0.0f64, 0.0f64, from);
    for (x, y) in a.iter().zip(b).filter(|(x, _)| x.t >= from) {
        let d = norm(&sub(&x.p, &y.p));
        if d > dev {
            dev = d;
            at = x.t;
        }
        scale = scale.max(norm(&y.p));
    }
    (if scale > 0.0 { dev / scale } else { dev }, at)
}

fn extrapolate_states(coarse: &[ParticleState], fine: &[ParticleState]) -> Vec<ParticleState> {
    coarse
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = fine[2 * i];
            ParticleState {
                t: c.t,
                x: std::array::from_fn(|k| (4.0 * f.x[k] - c.x[k]) / 3.0),
                p: std::array::from_fn(|k| (4.0 * f.p[k] - c.p[k]) / 3.0),
            }
        })
        .collect()
}

/// Run both routes at `cfg.step` and half of it with a common `T` (by default the
/// coarse grid's [`default_t_cut`]) and compare them.
pub fn fixed_point_agreement(cfg: &DynamicsConfig, t_cut: Option<f64>, delta: f64) -> Result<FixedPointAgreement> {
    let fine_cfg = DynamicsConfig { step: 0.5 * cfg.step, ..cfg.clone() };
    let mut t = t_cut;
    let mut runs = Vec::new();
    for c in [cfg, &fine_cfg] {
        let ctx = ForceContext::new(c)?;
        let direct = solve_nonlinear_with(&ctx, c)?;
        let kernels = FixedPointKernels::new(c)?;
        let t_here = *t.get_or_insert_with(|| default_t_cut(&kernels.kernel));
        let fp = fixed_point_solve(&ctx, &kernels, c, Some(t_here), delta)?;
        runs.push((direct, fp));
    }
    let (fine_direct, fine_fp) = runs.pop().expect("two levels");
    let (coarse_direct, coarse_fp) = runs.pop().expect("two levels");
    let t_cut = coarse_fp.t_cut;
    let ext_direct = extrapolate_states(&coarse_direct.states, &fine_direct.states);
    let ext_fp = extrapolate_states(&coarse_fp.trajectory.states, &fine_fp.trajectory.states);
    let (extrapolated_relative, worst_time) = relative_deviation(&ext_fp, &ext_direct, t_cut);
    Ok(FixedPointAgreement {
        step: cfg.step,
        t_cut,
        delta,
        raw_relative: [
            relative_deviation(&coarse_fp.trajectory.states, &coarse_direct.states, t_cut).0,
            relative_deviation(&fine_fp.trajectory.states, &fine_direct.states, t_cut).0,
        ],
        extrapolated_relative,
        worst_time,
        iterations: [coarse_fp.update_norms.len(), fine_fp.update_norms.len()],
        ratios: [coarse_fp.ratios, fine_fp.ratios],
        trajectory: Trajectory {
            step: cfg.step,
            horizon: coarse_fp.trajectory.horizon,
            method: SolveMethod::FixedPoint,
            states: ext_fp,
            forcing: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------------------------------
// decay analysis

#[derive(Clone, Debug, Serialize)]
pub struct PowerFit {
    /// `p` in `|v| ≈ c t^{−p}`.
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    /// Window actually used after dropping non-positive values.
    pub window: (f64, f64),
    pub dropped: usize,
}

/// Log-log least squares of `|v|` against `t` on `window`, each sample weighted by its
/// share of `ln t` so that late, densely sampled times do not dominate.
pub fn fit_decay_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerFit> {
    let (lo, hi) = window;
    if !(lo > 0.0) || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::Fit(format!("window [{lo}, {hi}] is shorter than one decade")));
    }
    let mut pts = Vec::new();
    let mut dropped = 0;
    for (t, v) in times.iter().zip(values) {
        if *t >= lo && *t <= hi {
            if v.abs() > 0.0 && v.is_finite() {
                pts.push((t.ln(), v.abs().ln()));
            } else {
                dropped += 1;
            }
        }
    }
    if pts.len() < 3 {
        return Err(Error::Fit("fewer than three usable samples in the window".into()));
    }
    let w: Vec<f64> = (0..pts.len())
        .map(|i| {
            let a = if i > 0 { pts[i].0 - pts[i - 1].0 } else { 0.0 };
            let b = if i + 1 < pts.len() { pts[i + 1].0 - pts[i].0 } else { 0.0 };
            0.5 * (a + b)
        })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = pts.iter().zip(&w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = pts.iter().zip(&w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, w) in pts.iter().zip(&w) {
        sxy += w * (p.0 - mx) * (p.1 - my);
        sxx += w * (p.0 - mx) * (p.0 - mx);
        syy += w * (p.1 - my) * (p.1 - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    let t_lo = pts[0].0.exp();
    let t_hi = pts[pts.len() - 1].0.exp();
    Ok(PowerFit { exponent: -slope, amplitude: (my - slope * mx).exp(), r_squared, window: (t_lo, t_hi), dropped })
}

#[derive(Clone, Debug, Serialize)]
pub struct XInfinity {
    pub estimate: Vec3,
    /// `|∫_H^∞ P|` under the fitted power law.
    pub uncertainty: f64,
    pub exponent: f64,
}

/// `X_∞ = X_H + P_H H/(p−1)`, integrating the power law fitted on the last decade along `P_H`.
pub fn x_infinity(traj: &Trajectory) -> Result<XInfinity> {
    let first = &traj.states[0];
    let last = traj.final_state();
    let p0 = norm(&first.p);
    let ph = norm(&last.p);
    if ph == 0.0 && p0 == 0.0 {
        return Ok(XInfinity { estimate: last.x, uncertainty: 0.0, exponent: f64::INFINITY });
    }
    if !(ph < 1e-3 * p0) {
        return Err(Error::NotDecayed(format!("|P_H| = {ph:e} is not below 1e-3 |P_0| = {:e}", 1e-3 * p0)));
    }
    let horizon = last.t;
    let fit = fit_decay_exponent(&traj.times(), &traj.p_norms(), (0.1 * horizon, horizon))?;
    if !(fit.exponent > 1.0) {
        return Err(Error::NotDecayed(format!("fitted exponent {} gives a divergent tail", fit.exponent)));
    }
    let scale = horizon / (fit.exponent - 1.0);
    let estimate = std::array::from_fn(|i| last.x[i] + scale * last.p[i]);
    Ok(XInfinity { estimate, uncertainty: scale * ph, exponent: fit.exponent })
}
