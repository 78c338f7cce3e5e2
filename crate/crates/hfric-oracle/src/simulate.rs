//! Full runs of the coupled system and their comparison with the effective dynamics.

use std::io::Write;
use std::sync::Arc;

use hfric_core::dynamics::{solve_nonlinear, DynamicsConfig, FieldInit, ParticleState, Trajectory};
use hfric_core::kernels::{CouplingConstants, RadialPotential, Vec3};
use serde::Serialize;

use crate::error::{OracleError, Result};
use crate::field::{init_field, Medium, SpectralField, Stepper};
use crate::grid::{GridSpec, NodeSet};

/// Largest `nodes × steps` a single run may cost.
pub const MAX_NODE_STEPS: f64 = 5e10;

/// Largest node set a run may allocate, about 130 bytes each.
pub const MAX_NODES: usize = 8_000_000;

/// Steps larger than this are rejected.
pub const MAX_STEP: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct OracleConfig {
    pub potential: RadialPotential,
    pub constants: CouplingConstants,
    pub x0: Vec3,
    pub p0: Vec3,
    pub field: FieldInit,
    pub horizon: f64,
    pub step: f64,
    pub grid: GridSpec,
    /// Energy, norm and splash residual are recorded every this many steps.
    pub record_stride: usize,
    /// Axial offsets from `X_t` at which the splash residual is sampled.
    pub splash_offsets: Vec<f64>,
    /// When set, `|P₀|` and `‖⟨x⟩⁴β₀‖₂` must not exceed it.
    pub small_data: Option<f64>,
}

impl OracleConfig {
    /// The small-data setup of [`DynamicsConfig::small_data`] on the default grid.
    pub fn small_data(horizon: f64, step: f64) -> Self {
        Self::from_dynamics(&DynamicsConfig::small_data(horizon, step), step, GridSpec::default())
    }

    /// The same physical data as a dynamics configuration.
    pub fn from_dynamics(cfg: &DynamicsConfig, step: f64, grid: GridSpec) -> Self {
        Self {
            potential: cfg.potential.clone(),
            constants: cfg.constants,
            x0: cfg.x0,
            p0: cfg.p0,
            field: cfg.field,
            horizon: cfg.horizon,
            step,
            grid,
            record_stride: ((0.5 / step).round() as usize).max(1),
            splash_offsets: (-8..=8).map(|i| 0.5 * i as f64).collect(),
            small_data: cfg.small_data,
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= MAX_STEP) || !(self.horizon >= self.step) {
            return Err(OracleError::InvalidArgument(format!(
                "need 0 < step <= {MAX_STEP} and step <= horizon, got {}, {}",
                self.step, self.horizon
            )));
        }
        self.grid.validate()?;
        if let Some(eps) = self.small_data {
            let p = self.p0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let b = self.field.weighted_norm();
            if p > eps || b > eps {
                return Err(OracleError::InvalidArgument(format!(
                    "data exceed the small-data bound {eps}: |P0| = {p}, weighted field norm = {b}"
                )));
            }
        }
        if self.grid.len() > MAX_NODES {
            return Err(OracleError::InvalidArgument(format!("{} nodes exceed {MAX_NODES}", self.grid.len())));
        }
        let cost = self.grid.len() as f64 * self.steps() as f64;
        if cost > MAX_NODE_STEPS {
            return Err(OracleError::InvalidArgument(format!("{cost:e} node-steps exceed {MAX_NODE_STEPS:e}")));
        }
        if self.grid.is_axisymmetric() {
            let off_axis = |v: &Vec3| v[0] != 0.0 || v[1] != 0.0;
            if off_axis(&self.x0) || off_axis(&self.p0) || (!self.field.is_zero() && off_axis(&self.field.center)) {
                return Err(OracleError::InvalidArgument(
                    "axisymmetric grid needs X₀, P₀ and the packet center on the z-axis".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleRecord {
    pub t: f64,
    pub energy: f64,
    pub splash_residual: f64,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRun {
    pub step: f64,
    pub horizon: f64,
    pub nodes: usize,
    #[serde(skip)]
    pub states: Vec<ParticleState>,
    pub records: Vec<OracleRecord>,
    /// `max_t |P_⊥|` for data prepared along `ẑ`.
    pub transverse_max: f64,
}

impl OracleRun {
    /// `max |E(t) − E(0)| / |E(0)|` over the records.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.records[0].energy;
        let dev = self.records.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max);
        if e0 != 0.0 {
            dev / e0.abs()
        } else {
            dev
        }
    }

    /// Columns `t, X1..3, P1..3, E, splash, norm`, one row per record.
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "t,X1,X2,X3,P1,P2,P3,E,splash,norm")?;
        for r in &self.records {
            let i = (r.t / self.step).round() as usize;
            let s = &self.states[i];
            let mut row = vec![r.t];
            row.extend(s.x);
            row.extend(s.p);
            row.extend([r.energy, r.splash_residual, r.norm]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn record(medium: &Medium, field: &SpectralField, s: &ParticleState, offsets: &[f64]) -> Result<OracleRecord> {
    Ok(OracleRecord {
        t: s.t,
        energy: medium.energy(field, &s.x, &s.p)?,
        splash_residual: medium.splash_residual(field, &s.x, offsets)?,
        norm: field.norm(),
    })
}

/// Integrate the coupled particle and field from `β(0) = β₀`.
pub fn simulate(cfg: &OracleConfig) -> Result<OracleRun> {
    cfg.validate()?;
    let nodes = Arc::new(NodeSet::new(cfg.grid)?);
    let medium = Medium::new(nodes.clone(), &cfg.potential, cfg.constants.nu());
    let stepper = Stepper::new(&medium, cfg.step)?;
    let mut field = init_field(&cfg.field, nodes.clone())?;
    let n = cfg.steps();
    let mut state = ParticleState { t: 0.0, x: cfg.x0, p: cfg.p0 };
    let mut states = Vec::with_capacity(n + 1);
    states.push(state);
    let mut records = vec![record(&medium, &field, &state, &cfg.splash_offsets)?];
    let stride = cfg.record_stride.max(1);
    let mut transverse_max = 0.0f64;
    for i in 1..=n {
        stepper.step(&mut field, &mut state)?;
        // pin the clock to the grid
        state.t = i as f64 * cfg.step;
        field.t = state.t;
        if !state.p.iter().all(|v| v.is_finite()) {
            return Err(OracleError::InvalidArgument(format!("non-finite momentum at t = {}", state.t)));
        }
        transverse_max = transverse_max.max(state.p[0].hypot(state.p[1]));
        states.push(state);
        if i % stride == 0 || i == n {
            records.push(record(&medium, &field, &state, &cfg.splash_offsets)?);
        }
    }
    Ok(OracleRun { step: cfg.step, horizon: n as f64 * cfg.step, nodes: nodes.len(), states, records, transverse_max })
}

/// Oracle against effective dynamics from identical data.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub oracle_step: f64,
    pub effective_step: f64,
    pub nodes: usize,
    /// `sup_t |P_oracle − P_effective| / sup_t |P_effective|` on the effective grid.
    pub deviation: f64,
    pub worst_time: f64,
    pub energy_drift: f64,
    pub transverse_max: f64,
    pub splash_first: f64,
    pub splash_last: f64,
    #[serde(skip)]
    pub oracle: OracleRun,
    #[serde(skip)]
    pub effective: Trajectory,
}

/// Deviation between an oracle run and an effective trajectory on the coarser of the two grids.
pub fn deviation(oracle: &OracleRun, effective: &Trajectory) -> Result<(f64, f64)> {
    let ratio = effective.step / oracle.step;
    let m = ratio.round() as usize;
    if m == 0 || (ratio - m as f64).abs() > 1e-9 * ratio {
        return Err(OracleError::InvalidArgument(format!(
            "effective step {} is not a multiple of the oracle step {}",
            effective.step, oracle.step
        )));
    }
    let (mut dev, mut scale, mut at) = (0.0f64, 0.0f64, 0.0);
    for (i, e) in effective.states.iter().enumerate() {
        let Some(o) = oracle.states.get(i * m) else { break };
        let d = (0..3).map(|a| (o.p[a] - e.p[a]).powi(2)).sum::<f64>().sqrt();
        if d > dev {
            dev = d;
            at = e.t;
        }
        scale = scale.max(e.p.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok((if scale > 0.0 { dev / scale } else { dev }, at))
}

/// Run the oracle and the effective law (at `effective_step`) from the same data.
pub fn compare_with_effective(cfg: &OracleConfig, effective_step: f64) -> Result<Comparison> {
    let oracle = simulate(cfg)?;
    let dyn_cfg = DynamicsConfig {
        potential: cfg.potential.clone(),
        constants: cfg.constants,
        x0: cfg.x0,
        p0: cfg.p0,
        field: cfg.field,
        horizon: cfg.horizon,
        step: effective_step,
        small_data: cfg.small_data,
    };
    let effective = solve_nonlinear(&dyn_cfg)?;
    let (dev, at) = deviation(&oracle, &effective)?;
    Ok(Comparison {
        oracle_step: cfg.step,
        effective_step,
        nodes: oracle.nodes,
        deviation: dev,
        worst_time: at,
        energy_drift: oracle.energy_drift(),
        transverse_max: oracle.transverse_max,
        splash_first: oracle.records.first().map_or(0.0, |r| r.splash_residual),
        splash_last: oracle.records.last().map_or(0.0, |r| r.splash_residual),
        oracle,
        effective,
    })
}

/// The same comparison at `(h, h_eff)` and `(h/2, h_eff/2)` on a fixed grid.
#[derive(Clone, Debug, Serialize)]
pub struct RefinementStudy {
    pub coarse: Comparison,
    pub fine: Comparison,
    /// `coarse.deviation / fine.deviation`.
    pub shrink: f64,
}

pub fn refinement_study(cfg: &OracleConfig, effective_step: f64) -> Result<RefinementStudy> {
    let coarse = compare_with_effective(cfg, effective_step)?;
    let mut fine_cfg = cfg.clone();
    fine_cfg.step = 0.5 * cfg.step;
    fine_cfg.record_stride = 2 * cfg.record_stride.max(1);
    let fine = compare_with_effective(&fine_cfg, 0.5 * effective_step)?;
    let shrink = coarse.deviation / fine.deviation;
    Ok(RefinementStudy { coarse, fine, shrink })
}
