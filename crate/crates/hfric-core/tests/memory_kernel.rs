use std::sync::OnceLock;

use hfric_core::kernels::{CouplingConstants, RadialPotential};
use hfric_core::memory_kernel::{
    causal_k_fourier, conv_i, invert_k_fourier, solve_k_volterra, solve_k_volterra_with_limit, tail_amplitude, trapezoid_k_run, CorrelationGrid,
    MemoryKernel,
};

/// Long horizon at a step whose halving change (≈ 6·10⁻⁶) is irrelevant for the asymptotics.
fn long_kernel() -> &'static MemoryKernel {
    static K: OnceLock<MemoryKernel> = OnceLock::new();
    K.get_or_init(|| {
        solve_k_volterra_with_limit(&RadialPotential::default(), &CouplingConstants::default(), 1e4, 0.05, 1e-5).unwrap()
    })
}

#[test]
fn initial_value_and_bound() {
    let k = long_kernel();
    assert_eq!(k.values[0], 1.0);
    assert_eq!(k.eval(0.0), 1.0);
    assert!(k.bounded());
    assert_eq!(k.eval(-2.0), 0.0);
}

#[test]
fn volterra_matches_fourier() {
    let pot = RadialPotential::default();
    let c = CouplingConstants::default();
    let k = solve_k_volterra(&pot, &c, 120.0, 0.02).unwrap();
    assert!(k.halving_change < 1e-6, "{}", k.halving_change);
    // 26 to 50 sit on the damped oscillation of K with period near 3
    for t in [0.5, 1.0, 2.5, 5.0, 12.0, 20.0, 26.0, 35.0, 50.0, 55.0, 100.0] {
        let f = invert_k_fourier(&pot, &c, t).unwrap();
        assert!((f - k.eval(t)).abs() < 1e-6, "t={t}: {f} vs {}", k.eval(t));
    }
}

#[test]
fn fourier_route_is_causal() {
    let pot = RadialPotential::default();
    let c = CouplingConstants::default();
    for t in [-1.0, -5.0] {
        assert!(causal_k_fourier(&pot, &c, t).unwrap().abs() < 1e-4);
    }
    let pos = causal_k_fourier(&pot, &c, 2.0).unwrap();
    let half = invert_k_fourier(&pot, &c, 2.0).unwrap();
    assert!((pos - half).abs() < 1e-6);
}

#[test]
fn tail_amplitude_and_exponent() {
    let k = long_kernel();
    let ratio = k.z * k.eval(1e3) * 1e3f64.sqrt() / tail_amplitude();
    assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    for t in [2e3, 5e3, 1e4] {
        let r = k.z * k.eval(t) * t.sqrt() / tail_amplitude();
        assert!((r - 1.0).abs() < 0.02, "t={t}: {r}");
    }
    // log-log slope of K on [1e2, 1e4]
    let pts: Vec<(f64, f64)> = (0..=40).map(|i| 10f64.powf(2.0 + i as f64 * 0.05)).map(|t| (t.ln(), k.eval(t).ln())).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 * p.0, a.1 + p.0 * p.1));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!((0.48..=0.52).contains(&-slope), "{slope}");
    // the fitted correction reproduces the grid past the fit window start
    let t = 3e3f64;
    let law = k.c_half.unwrap() / t.sqrt() + k.c_k.unwrap() * t.powf(-1.5);
    assert!((law - k.eval(t)).abs() < 1e-3 * k.eval(t));
}

#[test]
fn trapezoid_scheme_is_second_order() {
    let pot = RadialPotential::default();
    let z = CouplingConstants::default().z();
    let h = 0.1;
    let grid = CorrelationGrid::new(&pot, h / 4.0, 4 * 200 + 1, false).unwrap();
    let m1: Vec<f64> = grid.m.iter().step_by(4).copied().collect();
    let m2: Vec<f64> = grid.m.iter().step_by(2).copied().collect();
    let (k1, _) = trapezoid_k_run(&m1, z, h);
    let (k2, _) = trapezoid_k_run(&m2, z, h / 2.0);
    let (k4, _) = trapezoid_k_run(&grid.m, z, h / 4.0);
    let e1 = (0..=200).map(|i| (k1[i] - k2[2 * i]).abs()).fold(0.0, f64::max);
    let e2 = (0..=200).map(|i| (k2[2 * i] - k4[4 * i]).abs()).fold(0.0, f64::max);
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "order {order}");
}

#[test]
fn convolution_gain() {
    let k = long_kernel();
    let i = k.i_series();
    // I = −K̇ from the integro-differential equation itself
    for n in [20, 200, 2000, 20000] {
        assert!((i[n] + k.derivative[n]).abs() < 1e-6, "n={n}: {} vs {}", i[n], -k.derivative[n]);
    }
    assert_eq!(conv_i(k, 0.0).unwrap(), 0.0);
    let sup = |kern: &MemoryKernel| {
        let s = kern.i_series();
        kern.times()
            .zip(&s)
            .filter(|(t, _)| (1.0..=1e3).contains(t))
            .map(|(t, v)| v.abs() * (1.0 + t).powf(1.5))
            .fold(0.0, f64::max)
    };
    let coarse =
        solve_k_volterra_with_limit(&RadialPotential::default(), &CouplingConstants::default(), 1e3, 0.1, 1e-4).unwrap();
    let (a, b) = (sup(&coarse), sup(k));
    assert!(a.is_finite() && ((a - b) / b).abs() < 0.05, "{a} vs {b}");
    let late: Vec<f64> = [10.0, 100.0, 1e3, 1e4].iter().map(|t| conv_i(k, *t).unwrap().abs() * t.sqrt()).collect();
    assert!(late.windows(2).all(|w| w[1] < w[0]) && late[3] < 1e-3, "{late:?}");
}

#[test]
fn coarse_step_is_reported() {
    let r = solve_k_volterra(&RadialPotential::default(), &CouplingConstants::default(), 50.0, 0.2);
    assert!(matches!(r, Err(hfric_core::error::Error::StepTooCoarse { change, .. }) if change > 1e-6));
}
