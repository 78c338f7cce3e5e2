//! The run configuration: one TOML file with a section per subcommand.
//!
//! Every field has a default, and the defaults reproduce the acceptance suite.
//! `quick` swaps in coarse grids and short horizons.

use std::path::Path;

use hfric_core::dynamics::{DynamicsConfig, FieldInit};
use hfric_core::kernels::{CouplingConstants, Profile, RadialPotential, Vec3};
use hfric_oracle::{GridSpec, OracleConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: Profile,
    pub nu: f64,
    /// Initial data shared by `simulate`, `fixed-point` and `oracle`.
    pub data: DataConfig,
    pub kernels: KernelsConfig,
    pub interval: IntervalConfig,
    pub linear: LinearConfig,
    pub simulate: SimulateConfig,
    pub fixed_point: FixedPointConfig,
    pub oracle: OracleSection,
    pub audit: AuditConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub x0: Vec3,
    pub p0: Vec3,
    pub field: FieldInit,
    /// When set, `|P₀|` and `‖⟨x⟩⁴β₀‖₂` must not exceed it.
    pub small_data: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelsConfig {
    /// Where `t^{3/2}M` and `t^{1/2}V` are compared with their limits.
    pub asymptote_time: f64,
    /// Wavenumber of the small-`k` check of `G`.
    pub small_k: f64,
    pub kernel_horizon: f64,
    pub kernel_step: f64,
    pub halving_limit: f64,
    /// Times at which the Volterra kernel is compared with Fourier inversion.
    pub fourier_times: Vec<f64>,
    pub causal_times: Vec<f64>,
    /// Where `Z K(t) t^{1/2}` is compared with its limit.
    pub tail_time: f64,
    /// Window of the weighted convolution supremum.
    pub gain_window: [f64; 2],
    /// Halving limit of the coarse kernel used for the refinement of the supremum.
    pub gain_coarse_limit: f64,
    /// Times at which `|I(t)| t^{1/2}` is reported.
    pub gain_late_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalConfig {
    pub resolution: f64,
    /// Number of `δ` at which the `Ω = π(Ω₁ + Ω₂)` identity is checked.
    pub identity_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    pub horizon: f64,
    pub step: f64,
    pub fit_window: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub horizon: f64,
    pub step: f64,
    /// `δ` of the weight `t^{1/2+δ}`.
    pub delta: f64,
    /// Weighted supremum taken over `t ≥ sup_from`.
    pub sup_from: f64,
    /// Repeat at half the step to measure refinement stability.
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPointConfig {
    pub horizon: f64,
    pub step: f64,
    pub delta: f64,
    /// Cut time `T`; by default the first time after which `|K| < 0.2` for good.
    pub t_cut: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub horizon: f64,
    pub step: f64,
    pub effective_step: f64,
    pub grid: GridSpec,
    /// Repeat with both steps halved.
    pub refine: bool,
    /// Horizon of the potential-free unitarity run.
    pub free_horizon: f64,
    /// The splash residual must be smaller at the horizon than at this time.
    pub splash_early: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub delta: f64,
    /// Cut times, increasing; the bounds are checked at the last one.
    pub t_cuts: Vec<f64>,
    pub kernel_horizon: f64,
    pub kernel_step: f64,
    pub halving_limit: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            potential: Profile::Gaussian { sigma: 1.0 },
            nu: 1.0,
            data: DataConfig::default(),
            kernels: KernelsConfig::default(),
            interval: IntervalConfig::default(),
            linear: LinearConfig::default(),
            simulate: SimulateConfig::default(),
            fixed_point: FixedPointConfig::default(),
            oracle: OracleSection::default(),
            audit: AuditConfig::default(),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { x0: [0.0; 3], p0: [0.0, 0.0, 1e-2], field: FieldInit::default(), small_data: None }
    }
}

impl Default for KernelsConfig {
    fn default() -> Self {
        Self {
            asymptote_time: 1e3,
            small_k: 1e-4,
            kernel_horizon: 1e4,
            kernel_step: 0.05,
            halving_limit: 1e-5,
            fourier_times: vec![0.5, 1.0, 2.0, 3.5, 5.0, 8.0, 12.0, 20.0, 35.0, 55.0, 80.0, 100.0],
            causal_times: vec![-1.0, -5.0],
            tail_time: 1e3,
            gain_window: [1.0, 1e3],
            gain_coarse_limit: 1e-4,
            gain_late_times: vec![10.0, 100.0, 1e3, 1e4],
        }
    }
}

impl Default for IntervalConfig {
    fn default() -> Self {
        Self { resolution: 1e-3, identity_samples: 50 }
    }
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { horizon: 1e3, step: 0.05, fit_window: [1e2, 1e3] }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { horizon: 500.0, step: 0.05, delta: 0.3, sup_from: 1.0, refine: true }
    }
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { horizon: 500.0, step: 0.05, delta: 0.3, t_cut: None }
    }
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            horizon: 50.0,
            step: 0.01,
            effective_step: 0.05,
            grid: GridSpec::default(),
            refine: true,
            free_horizon: 10.0,
            splash_early: 5.0,
        }
    }
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { delta: 0.3, t_cuts: vec![1e2, 1e3], kernel_horizon: 1e4, kernel_step: 0.05, halving_limit: 1e-5 }
    }
}

fn bad(field: &str, constraint: impl Into<String>) -> CliError {
    CliError::Config { field: field.into(), constraint: constraint.into() }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be finite and > 0, got {v}")))
    }
}

fn step_within(prefix: &str, horizon: f64, step: f64) -> Result<()> {
    positive(&format!("{prefix}.horizon"), horizon)?;
    positive(&format!("{prefix}.step"), step)?;
    if step > horizon {
        return Err(bad(&format!("{prefix}.step"), format!("must not exceed the horizon {horizon}")));
    }
    Ok(())
}

fn delta_in(field: &str, d: f64, hi: f64) -> Result<()> {
    if d > 0.0 && d < hi {
        Ok(())
    } else {
        Err(bad(field, format!("must lie in (0, {hi}), got {d}")))
    }
}

fn window(field: &str, w: [f64; 2]) -> Result<()> {
    if w[0] > 0.0 && w[1] >= 10.0 * w[0] {
        Ok(())
    } else {
        Err(bad(field, format!("needs 0 < lo and hi >= 10 lo, got {w:?}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad("<file>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Coarse grids and short horizons for CI.
    pub fn quick(mut self) -> Self {
        let k = &mut self.kernels;
        k.kernel_horizon = 1e3;
        k.kernel_step = 0.1;
        k.halving_limit = 1e-4;
        k.fourier_times = vec![0.5, 2.0, 10.0, 50.0];
        k.gain_coarse_limit = 1e-2;
        k.gain_late_times = vec![10.0, 100.0, 1e3];
        self.interval.identity_samples = 10;
        self.linear.step = 0.1;
        self.simulate.horizon = 100.0;
        self.simulate.step = 0.1;
        self.fixed_point.horizon = 40.0;
        let o = &mut self.oracle;
        o.horizon = 20.0;
        o.grid = GridSpec::Axisymmetric { k_max: 8.0, n_rho: 96, n_z: 192 };
        o.free_horizon = 5.0;
        let a = &mut self.audit;
        a.t_cuts = vec![10.0, 100.0];
        a.kernel_horizon = 1e3;
        a.kernel_step = 0.1;
        a.halving_limit = 1e-4;
        self
    }

    pub fn potential(&self) -> Result<RadialPotential> {
        RadialPotential::from_profile(self.potential.clone()).map_err(|e| bad("potential", e.to_string()))
    }

    pub fn constants(&self) -> Result<CouplingConstants> {
        CouplingConstants::new(self.nu).map_err(|e| bad("nu", e.to_string()))
    }

    fn dynamics(&self, horizon: f64, step: f64) -> Result<DynamicsConfig> {
        Ok(DynamicsConfig {
            potential: self.potential()?,
            constants: self.constants()?,
            x0: self.data.x0,
            p0: self.data.p0,
            field: self.data.field,
            horizon,
            step,
            small_data: self.data.small_data,
        })
    }

    pub fn simulate_dynamics(&self) -> Result<DynamicsConfig> {
        self.dynamics(self.simulate.horizon, self.simulate.step)
    }

    pub fn fixed_point_dynamics(&self) -> Result<DynamicsConfig> {
        self.dynamics(self.fixed_point.horizon, self.fixed_point.step)
    }

    pub fn oracle_config(&self) -> Result<OracleConfig> {
        let o = &self.oracle;
        Ok(OracleConfig::from_dynamics(&self.dynamics(o.horizon, o.effective_step)?, o.step, o.grid))
    }

    /// Check the shared fields and the section of `command` before anything runs.
    pub fn validate(&self, command: crate::Command) -> Result<()> {
        use crate::Command::*;
        self.potential()?;
        self.constants()?;
        let d = &self.data;
        if !d.x0.iter().chain(&d.p0).chain(&d.field.center).all(|v| v.is_finite()) || !d.field.amplitude.is_finite() {
            return Err(bad("data", "positions, momenta and the amplitude must be finite"));
        }
        positive("data.field.width", d.field.width)?;
        if let Some(eps) = d.small_data {
            positive("data.small_data", eps)?;
        }
        match command {
            Kernels => {
                let k = &self.kernels;
                positive("kernels.asymptote_time", k.asymptote_time)?;
                positive("kernels.small_k", k.small_k)?;
                step_within("kernels.kernel", k.kernel_horizon, k.kernel_step)?;
                positive("kernels.halving_limit", k.halving_limit)?;
                positive("kernels.gain_coarse_limit", k.gain_coarse_limit)?;
                if self.nu <= 0.0 {
                    return Err(bad("nu", "the kernel analysis needs nu > 0"));
                }
                if k.fourier_times.iter().any(|t| !(*t > 0.0 && *t <= k.kernel_horizon)) {
                    return Err(bad("kernels.fourier_times", "must lie in (0, kernel_horizon]"));
                }
                if k.causal_times.iter().any(|t| !(*t < 0.0)) {
                    return Err(bad("kernels.causal_times", "must be negative"));
                }
                if !(k.tail_time > 0.0 && k.tail_time <= k.kernel_horizon) {
                    return Err(bad("kernels.tail_time", "must lie in (0, kernel_horizon]"));
                }
                if !(k.gain_window[0] >= 0.0 && k.gain_window[1] > k.gain_window[0] && k.gain_window[1] <= k.kernel_horizon) {
                    return Err(bad("kernels.gain_window", "needs 0 <= lo < hi <= kernel_horizon"));
                }
                if k.gain_late_times.iter().any(|t| !(*t > 0.0 && *t <= k.kernel_horizon)) {
                    return Err(bad("kernels.gain_late_times", "must lie in (0, kernel_horizon]"));
                }
            }
            Interval => {
                let i = &self.interval;
                if !(i.resolution > 0.0 && i.resolution <= 1e-3) {
                    return Err(bad("interval.resolution", "must lie in (0, 1e-3]"));
                }
                if i.identity_samples == 0 {
                    return Err(bad("interval.identity_samples", "must be >= 1"));
                }
            }
            Linear => {
                let l = &self.linear;
                step_within("linear", l.horizon, l.step)?;
                window("linear.fit_window", l.fit_window)?;
                if l.fit_window[1] > l.horizon {
                    return Err(bad("linear.fit_window", "must end within the horizon"));
                }
            }
            Simulate => {
                let s = &self.simulate;
                step_within("simulate", s.horizon, s.step)?;
                delta_in("simulate.delta", s.delta, 1.0)?;
                if !(s.sup_from >= 0.0 && s.sup_from < s.horizon) {
                    return Err(bad("simulate.sup_from", "must lie in [0, horizon)"));
                }
                self.simulate_dynamics()?.validate().map_err(|e| bad("simulate", e.to_string()))?;
            }
            FixedPoint => {
                let f = &self.fixed_point;
                step_within("fixed_point", f.horizon, f.step)?;
                delta_in("fixed_point.delta", f.delta, 1.0)?;
                if let Some(t) = f.t_cut {
                    if !(t > 0.0 && t < f.horizon) {
                        return Err(bad("fixed_point.t_cut", "must lie in (0, horizon)"));
                    }
                }
                self.fixed_point_dynamics()?.validate().map_err(|e| bad("fixed_point", e.to_string()))?;
            }
            Oracle => {
                let o = &self.oracle;
                step_within("oracle", o.horizon, o.step)?;
                positive("oracle.effective_step", o.effective_step)?;
                positive("oracle.free_horizon", o.free_horizon)?;
                let ratio = o.effective_step / o.step;
                if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
                    return Err(bad("oracle.effective_step", "must be a whole multiple of oracle.step"));
                }
                if !(o.splash_early > 0.0 && o.splash_early < o.horizon) {
                    return Err(bad("oracle.splash_early", "must lie in (0, horizon)"));
                }
                self.oracle_config()?.validate().map_err(|e| bad("oracle", e.to_string()))?;
            }
            Audit => {
                let a = &self.audit;
                delta_in("audit.delta", a.delta, 0.5)?;
                step_within("audit.kernel", a.kernel_horizon, a.kernel_step)?;
                positive("audit.halving_limit", a.halving_limit)?;
                if self.nu <= 0.0 {
                    return Err(bad("nu", "the audit needs nu > 0"));
                }
                if a.t_cuts.is_empty() || a.t_cuts.iter().any(|t| !(*t > 0.0)) || a.t_cuts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(bad("audit.t_cuts", "must be positive and increasing"));
                }
            }
        }
        Ok(())
    }
}
