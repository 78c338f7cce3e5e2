use std::f64::consts::PI;
use std::sync::OnceLock;

use hfric_core::dynamics::*;
use hfric_core::error::Error;
use hfric_core::kernels::{CouplingConstants, RadialPotential};
use hfric_core::memory_kernel::{solve_k_volterra_with_limit, CorrelationGrid};
use hfric_core::volterra::trapezoid_convolution;
use hfric_quad::Complex64;
use proptest::prelude::*;

fn small(horizon: f64, step: f64) -> DynamicsConfig {
    DynamicsConfig::small_data(horizon, step)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn linear() -> &'static LinearSolution {
    static L: OnceLock<LinearSolution> = OnceLock::new();
    L.get_or_init(|| {
        solve_linearized(&RadialPotential::default(), &CouplingConstants::default(), 1000.0, 0.05).unwrap()
    })
}

/// A short small-data run shared by the forcing checks.
fn short_run() -> &'static (DynamicsConfig, ForceContext, Trajectory) {
    static R: OnceLock<(DynamicsConfig, ForceContext, Trajectory)> = OnceLock::new();
    R.get_or_init(|| {
        let cfg = small(30.0, 0.05);
        let ctx = ForceContext::new(&cfg).unwrap();
        let traj = solve_nonlinear_with(&ctx, &cfg).unwrap();
        (cfg, ctx, traj)
    })
}

// --- linearized law

#[test]
fn linear_starts_at_one_and_decays_with_integrable_exponent() {
    let sol = linear();
    assert_eq!(sol.q[0], 1.0);
    let fit = fit_decay_exponent(&sol.times(), &sol.q, (100.0, 1000.0)).unwrap();
    assert!(fit.exponent >= 1.05 && fit.exponent <= 1.30, "exponent {}", fit.exponent);
    assert!(fit.r_squared > 0.999);
}

#[test]
fn linear_scheme_is_second_order() {
    let sol = linear();
    assert!(sol.order > 1.95, "order {}", sol.order);
    assert!(sol.halving_change < 1e-4, "halving change {}", sol.halving_change);
}

#[test]
fn linear_without_coupling_stays_at_one() {
    let c = CouplingConstants::new(0.0).unwrap();
    let sol = solve_linearized(&RadialPotential::default(), &c, 20.0, 0.1).unwrap();
    assert!(sol.q.iter().all(|q| *q == 1.0));
    assert!(sol.q_dot.iter().all(|q| *q == 0.0));
}

#[test]
fn linear_cost_guard() {
    let r = solve_linearized(&RadialPotential::default(), &CouplingConstants::default(), 2000.0, 0.01);
    assert!(matches!(r, Err(Error::CostGuard(_))));
}

/// Largest `|K + Z·K * (M Q) − q|` with `Q = ∫q`: the linear law solved through its resolvent.
fn resolvent_mismatch(step: f64) -> f64 {
    let (pot, c) = (RadialPotential::default(), CouplingConstants::default());
    let horizon = 40.0;
    let sol = solve_linearized(&pot, &c, horizon, step).unwrap();
    let h = sol.step;
    let kernel = solve_k_volterra_with_limit(&pot, &c, horizon, 2.0 * h, 1e-3).unwrap();
    let grid = CorrelationGrid::new(&pot, h, sol.q.len(), false).unwrap();
    let mut big_q = vec![0.0; sol.q.len()];
    for i in 1..big_q.len() {
        big_q[i] = big_q[i - 1] + 0.5 * h * (sol.q[i - 1] + sol.q[i]);
    }
    let mq: Vec<f64> = grid.m.iter().zip(&big_q).map(|(m, q)| m * q).collect();
    let conv = trapezoid_convolution(&kernel.values[..mq.len()], &mq, h);
    (0..mq.len()).map(|i| (kernel.values[i] + c.z() * conv[i] - sol.q[i]).abs()).fold(0.0, f64::max)
}

#[test]
fn linear_solution_matches_resolvent_form() {
    // the trapezoidal convolution in the check is itself second order
    let (coarse, fine) = (resolvent_mismatch(0.1), resolvent_mismatch(0.05));
    assert!(fine < 1e-4, "resolvent mismatch {fine}");
    assert!(coarse / fine > 3.5, "mismatch {coarse} -> {fine}");
}

// --- nonlinear law

#[test]
fn no_coupling_is_ballistic() {
    let mut cfg = small(20.0, 0.05);
    cfg.constants = CouplingConstants::new(0.0).unwrap();
    cfg.x0 = [0.1, -0.2, 0.3];
    let traj = solve_nonlinear(&cfg).unwrap();
    for s in &traj.states {
        assert_eq!(s.p, cfg.p0);
        for i in 0..3 {
            assert!((s.x[i] - cfg.x0[i] - s.t * cfg.p0[i]).abs() < 1e-13);
        }
    }
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let mut cfg = small(20.0, 0.05);
    cfg.p0 = [0.0; 3];
    cfg.field = FieldInit::zero();
    cfg.x0 = [0.4, 0.0, -1.0];
    let traj = solve_nonlinear(&cfg).unwrap();
    assert!(traj.states.iter().all(|s| s.p == [0.0; 3] && s.x == cfg.x0));
}

#[test]
fn position_integrates_momentum() {
    let (cfg, _, traj) = short_run();
    let h = cfg.step;
    for w in traj.states.windows(2) {
        for i in 0..3 {
            let dx = w[1].x[i] - w[0].x[i];
            assert!((dx - 0.5 * h * (w[0].p[i] + w[1].p[i])).abs() < 1e-15);
        }
    }
}

#[test]
fn recorded_forcing_accounts_for_momentum_change() {
    let (cfg, _, traj) = short_run();
    let h = cfg.step;
    let scale = max_abs(traj.forcing.iter().flat_map(|f| f.total()));
    let mut worst = 0.0f64;
    for (w, f) in traj.states.windows(2).zip(traj.forcing.windows(2)) {
        let (f0, f1) = (f[0].total(), f[1].total());
        for i in 0..3 {
            let rate = (w[1].p[i] - w[0].p[i]) / h;
            worst = worst.max((rate - 0.5 * (f0[i] + f1[i])).abs());
        }
    }
    assert!(worst < 1e-3 * scale, "{worst} vs {scale}");
}

#[test]
fn history_forcing_matches_split_forcing() {
    let (_, ctx, traj) = short_run();
    let (mut d1, mut d2, mut d0) = (0.0f64, 0.0f64, 0.0f64);
    let s1 = max_abs(traj.forcing.iter().flat_map(|f| f.b1));
    let s2 = max_abs(traj.forcing.iter().flat_map(|f| f.b2));
    for m in (0..traj.states.len()).step_by(37) {
        let (b0, b1, b2) = forcing_b(ctx, &traj.states, m).unwrap();
        let rec = &traj.forcing[m];
        for i in 0..3 {
            d0 = d0.max((b0[i] - rec.b0[i]).abs());
            d1 = d1.max((b1[i] - rec.b1[i]).abs());
            d2 = d2.max((b2[i] - rec.b2[i]).abs());
        }
    }
    assert!(d0 == 0.0, "B0 differs by {d0}");
    assert!(d1 < 1e-3 * s1, "B1: {d1} vs {s1}");
    assert!(d2 < 1e-3 * s2, "B2: {d2} vs {s2}");
}

#[test]
fn stationary_history_has_no_displacement_forcing() {
    let (_, ctx, _) = short_run();
    let hist: Vec<ParticleState> = (0..200)
        .map(|i| ParticleState { t: i as f64 * 0.05, x: [0.2, -0.1, 0.5], p: [(i as f64).sin(), 0.3, -1.0] })
        .collect();
    let (_, b1, b2) = forcing_b(ctx, &hist, 199).unwrap();
    assert_eq!(b1, [0.0; 3]);
    assert_eq!(b2, [0.0; 3]);
}

#[test]
fn forcing_rejects_short_history() {
    let (_, ctx, traj) = short_run();
    assert!(matches!(forcing_b(ctx, &traj.states[..10], 10), Err(Error::OutOfRange(_))));
}

#[test]
fn zero_field_has_no_packet_forcing() {
    let mut cfg = small(5.0, 0.05);
    cfg.field = FieldInit::zero();
    let ctx = ForceContext::new(&cfg).unwrap();
    for k in [0, 10, 100] {
        assert_eq!(ctx.b0(k, &[0.3, 0.2, 0.1]).unwrap(), [0.0; 3]);
    }
}

/// `⟨∇W^X, e^{iΔt/2}β₀⟩` for Gaussians is a Gaussian in `c − X` with complex width
/// `b = (σ² + w² + it)/2`.
fn b0_closed_form(nu: f64, field: &FieldInit, t: f64, x: [f64; 3]) -> [f64; 3] {
    let y: [f64; 3] = std::array::from_fn(|i| field.center[i] - x[i]);
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let b = Complex64::new(1.0 + field.width * field.width, t) * 0.5;
    let psi = (Complex64::new(PI, 0.0) / b).powf(1.5) * (-r2 / (4.0 * b)).exp();
    let coef = nu * field.amplitude * field.width.powi(3) * (-psi / (2.0 * b)).re;
    y.map(|v| coef * v)
}

#[test]
fn packet_forcing_matches_gaussian_pairing() {
    for width in [0.7, 1.0, 1.6] {
        let mut cfg = small(20.0, 0.05);
        cfg.field = FieldInit { amplitude: 0.02, width, center: [0.3, -0.2, 0.1] };
        let ctx = ForceContext::new(&cfg).unwrap();
        for (k, x) in [(0, [0.0, 0.0, 0.0]), (40, [1.0, 0.5, 0.0]), (300, [0.0, 0.0, 2.5]), (400, [4.0, 1.0, -2.0])] {
            let got = ctx.b0(k, &x).unwrap();
            let want = b0_closed_form(1.0, &cfg.field, k as f64 * 0.05, x);
            let scale = max_abs(want);
            for i in 0..3 {
                assert!((got[i] - want[i]).abs() <= 1e-9 * scale, "w={width} k={k}: {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn packet_forcing_decays_like_free_propagation() {
    let cfg = small(200.0, 0.1);
    let ctx = ForceContext::new(&cfg).unwrap();
    let x = [0.5, 0.0, 0.0];
    let weighted: Vec<f64> = (10..=2000)
        .step_by(10)
        .map(|k| {
            let t = k as f64 * 0.1;
            max_abs(ctx.b0(k, &x).unwrap()) * t.powf(1.5)
        })
        .collect();
    assert!(weighted.iter().all(|v| v.is_finite()));
    // past the packet's transit the weighted force only falls
    let late = &weighted[weighted.len() / 10..];
    assert!(late.windows(2).all(|w| w[1] <= w[0]));
    assert!(*late.last().unwrap() < 0.2 * max_abs(weighted.iter().copied()));
}

fn rotate(r: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|j| r[i][j] * v[j]).sum())
}

#[test]
fn trajectories_rotate_with_the_data() {
    let (a, b) = (0.7f64, -1.1f64);
    let rz = [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
    let rx = [[1.0, 0.0, 0.0], [0.0, b.cos(), -b.sin()], [0.0, b.sin(), b.cos()]];
    let r: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| rz[i][k] * rx[k][j]).sum()));
    let mut cfg = small(15.0, 0.05);
    cfg.x0 = [0.1, 0.2, -0.1];
    cfg.p0 = [3e-3, -2e-3, 8e-3];
    cfg.field.center = [0.4, 0.0, 0.3];
    let base = solve_nonlinear(&cfg).unwrap();
    let mut turned = cfg.clone();
    turned.x0 = rotate(&r, cfg.x0);
    turned.p0 = rotate(&r, cfg.p0);
    turned.field.center = rotate(&r, cfg.field.center);
    let rot = solve_nonlinear(&turned).unwrap();
    let scale = max_abs(base.states.iter().flat_map(|s| s.p));
    for (s, t) in base.states.iter().zip(&rot.states) {
        let want = rotate(&r, s.p);
        for i in 0..3 {
            assert!((t.p[i] - want[i]).abs() < 1e-8 * scale);
        }
    }
}

#[test]
fn weighted_field_norm_matches_grid_integral() {
    let field = FieldInit { amplitude: 0.3, width: 0.8, center: [0.5, -0.2, 0.7] };
    let (n, half) = (160usize, 7.0f64);
    let dx = 2.0 * half / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let x = -half + (i as f64 + 0.5) * dx;
        for j in 0..n {
            let y = -half + (j as f64 + 0.5) * dx;
            for k in 0..n {
                let z = -half + (k as f64 + 0.5) * dx;
                let d2 = (x - field.center[0]).powi(2) + (y - field.center[1]).powi(2) + (z - field.center[2]).powi(2);
                let beta = field.amplitude * (-d2 / (2.0 * field.width * field.width)).exp();
                acc += (1.0 + x * x + y * y + z * z).powi(4) * beta * beta;
            }
        }
    }
    let grid = (acc * dx.powi(3)).sqrt();
    let exact = field.weighted_norm();
    assert!((grid - exact).abs() < 1e-8 * exact, "{grid} vs {exact}");
}

#[test]
fn configuration_guards() {
    assert!(matches!(small(3000.0, 0.05).validate(), Err(Error::CostGuard(_))));
    let mut cfg = small(10.0, 0.05);
    cfg.small_data = Some(1e-3);
    assert!(matches!(cfg.validate(), Err(Error::InvalidArgument(_))));
    cfg.small_data = Some(1.0);
    assert!(cfg.validate().is_ok());
    assert!(matches!(small(10.0, 0.0).validate(), Err(Error::InvalidArgument(_))));
}

#[test]
fn weighted_sup_is_stable_under_refinement() {
    let coarse = solve_nonlinear(&small(100.0, 0.1)).unwrap();
    let fine = solve_nonlinear(&small(100.0, 0.05)).unwrap();
    let (a, b) = (coarse.weighted_sup(0.3, 1.0), fine.weighted_sup(0.3, 1.0));
    assert!(a > 0.0 && (a - b).abs() < 0.02 * b, "{a} vs {b}");
}

// --- decay analysis

#[test]
fn fit_recovers_exact_power_law() {
    let t: Vec<f64> = (1..=2000).map(|i| i as f64 * 0.5).collect();
    let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-0.75)).collect();
    let fit = fit_decay_exponent(&t, &v, (10.0, 1000.0)).unwrap();
    assert!((fit.exponent - 0.75).abs() < 1e-10);
    assert!((fit.amplitude - 3.0).abs() < 1e-9);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    assert_eq!(fit.dropped, 0);
}

#[test]
fn fit_drops_zeros_and_rejects_short_windows() {
    let t: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
    let mut v: Vec<f64> = t.iter().map(|t| t.powf(-1.2)).collect();
    v[499] = 0.0;
    let fit = fit_decay_exponent(&t, &v, (50.0, 1000.0)).unwrap();
    assert_eq!(fit.dropped, 1);
    assert!((fit.exponent - 1.2).abs() < 1e-10);
    assert!(matches!(fit_decay_exponent(&t, &v, (100.0, 900.0)), Err(Error::Fit(_))));
}

#[test]
fn memory_kernel_tail_exponent() {
    let k = solve_k_volterra_with_limit(&RadialPotential::default(), &CouplingConstants::default(), 1000.0, 0.1, 1e-4)
        .unwrap();
    let t: Vec<f64> = k.times().collect();
    let fit = fit_decay_exponent(&t, &k.values, (100.0, 1000.0)).unwrap();
    assert!((fit.exponent - 0.5).abs() < 0.02, "exponent {}", fit.exponent);
}

#[test]
fn x_infinity_cases() {
    let mut cfg = small(20.0, 0.05);
    cfg.constants = CouplingConstants::new(0.0).unwrap();
    let ballistic = solve_nonlinear(&cfg).unwrap();
    assert!(matches!(x_infinity(&ballistic), Err(Error::NotDecayed(_))));

    cfg.p0 = [0.0; 3];
    cfg.field = FieldInit::zero();
    cfg.x0 = [1.0, 2.0, 3.0];
    let still = solve_nonlinear(&cfg).unwrap();
    let x = x_infinity(&still).unwrap();
    assert_eq!(x.estimate, [1.0, 2.0, 3.0]);
    assert_eq!(x.uncertainty, 0.0);

    // a synthetic trajectory decaying like t^{-0.8} has a divergent tail
    let states: Vec<ParticleState> = (0..=1000)
        .map(|i| {
            let t = i as f64;
            ParticleState { t, x: [0.0; 3], p: [0.0, 0.0, (1.0 + t).powf(-0.8) * 1e-2 * if i > 0 { 0.01 } else { 1.0 }] }
        })
        .collect();
    let slow = Trajectory { step: 1.0, horizon: 1000.0, method: SolveMethod::PredictorCorrector, states, forcing: Vec::new() };
    assert!(matches!(x_infinity(&slow), Err(Error::NotDecayed(_))));
}

// --- fixed-point reformulation

#[test]
fn fixed_point_zero_data_converges_at_once() {
    let mut cfg = small(20.0, 0.05);
    cfg.p0 = [0.0; 3];
    cfg.field = FieldInit::zero();
    let ctx = ForceContext::new(&cfg).unwrap();
    let kernels = FixedPointKernels::new(&cfg).unwrap();
    let r = fixed_point_solve(&ctx, &kernels, &cfg, None, 0.3).unwrap();
    assert_eq!(r.update_norms, vec![0.0]);
    assert!(r.trajectory.states.iter().all(|s| s.p == [0.0; 3]));
}

#[test]
fn fixed_point_needs_small_kernel() {
    let cfg = small(20.0, 0.05);
    let ctx = ForceContext::new(&cfg).unwrap();
    let kernels = FixedPointKernels::new(&cfg).unwrap();
    assert!(matches!(fixed_point_solve(&ctx, &kernels, &cfg, Some(0.1), 0.3), Err(Error::InvalidArgument(_))));
    assert!(matches!(fixed_point_solve(&ctx, &kernels, &cfg, Some(25.0), 0.3), Err(Error::InvalidArgument(_))));
}

#[test]
fn fixed_point_contracts_and_agrees_with_direct_solve() {
    let a = fixed_point_agreement(&small(60.0, 0.05), None, 0.3).unwrap();
    for r in a.ratios.iter().flatten() {
        assert!(*r < 1.0, "ratio {r}");
    }
    // the raw mismatch is a second-order discretization gap
    let order = (a.raw_relative[0] / a.raw_relative[1]).log2();
    assert!(order > 1.8, "raw order {order}");
    assert!(a.extrapolated_relative < 1e-4, "extrapolated mismatch {}", a.extrapolated_relative);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Reflecting the data through the packet center reflects the response.
    #[test]
    fn law_is_odd_under_reflection(px in -8e-3f64..8e-3, pz in -8e-3f64..8e-3, amp in -1e-2f64..1e-2) {
        let mut cfg = small(6.0, 0.05);
        cfg.p0 = [px, 0.0, pz];
        cfg.field.amplitude = amp;
        let a = solve_nonlinear(&cfg).unwrap();
        cfg.p0 = [-px, 0.0, -pz];
        let b = solve_nonlinear(&cfg).unwrap();
        for (s, t) in a.states.iter().zip(&b.states) {
            for i in 0..3 {
                prop_assert!((s.p[i] + t.p[i]).abs() <= 1e-15 + 1e-12 * s.p[i].abs());
            }
        }
    }
}
