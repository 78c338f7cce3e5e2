use std::f64::consts::PI;

use hfric_quad::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// erf via the Kummer form (2/√π) e^{−z²} Σ 2ⁿ z^{2n+1}/(2n+1)!!, independent of the library series.
fn erf_kummer(z: Complex64) -> Complex64 {
    let mut term = z;
    let mut sum = z;
    for n in 1..400 {
        term = term * z * z * 2.0 / (2 * n + 1) as f64;
        sum += term;
    }
    sum * (-z * z).exp() * (2.0 / PI.sqrt())
}

/// erf z = (2/√π) ∫₀¹ z e^{−z²s²} ds by composite Simpson.
fn erf_ray_simpson(z: Complex64) -> Complex64 {
    let n = 400_000;
    let h = 1.0 / n as f64;
    let f = |s: f64| (-z * z * s * s).exp() * z;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0) * (2.0 / PI.sqrt())
}

#[test]
fn fresnel_integrals() {
    let q = gauss_oscillatory(&|_| 1.0, c(0.0, -1.0), 0, &QuadratureSpec::default()).unwrap();
    let expected = (PI / 8.0).sqrt();
    assert!((q.value.re - expected).abs() < 1e-6, "{}", q.value.re);
    assert!((q.value.im - expected).abs() < 1e-6, "{}", q.value.im);
}

#[test]
fn complex_gaussian_moment() {
    let w = |r: f64| (-r * r).exp();
    let q = gauss_oscillatory(&w, c(0.0, 2.0), 2, &QuadratureSpec::table()).unwrap();
    let exact = c(1.0, 2.0).powf(-1.5) * (PI.sqrt() / 4.0);
    assert!((q.value - exact).norm() < 1e-10, "{} vs {}", q.value, exact);
}

#[test]
fn complex_gaussian_moment_long_time() {
    let w = |r: f64| (-r * r).exp();
    for &t in &[50.0, 400.0, 3000.0] {
        let q = gauss_oscillatory(&w, c(0.0, t / 2.0), 2, &QuadratureSpec::table()).unwrap();
        let exact = c(1.0, t / 2.0).powf(-1.5) * (PI.sqrt() / 4.0);
        assert!((q.value - exact).norm() < 1e-9, "t={t}: {} vs {}", q.value, exact);
    }
}

#[test]
fn rejects_growing_gaussian() {
    assert!(gauss_oscillatory(&|_| 1.0, c(-0.1, 1.0), 0, &QuadratureSpec::default()).is_err());
}

#[test]
fn spec_validation() {
    let bad = QuadratureSpec { nodes: 4, ..QuadratureSpec::default() };
    assert!(bad.validate().is_err());
    let bad = QuadratureSpec { target: 0.0, ..QuadratureSpec::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn doubling_nodes_stays_within_error_estimate() {
    let w = |r: f64| (-r * r).exp() * (1.0 + r).cos();
    let a = c(0.3, 3.0);
    let s16 = QuadratureSpec { nodes: 16, ..QuadratureSpec::default() };
    let s32 = QuadratureSpec { nodes: 32, ..QuadratureSpec::default() };
    let q16 = gauss_oscillatory(&w, a, 1, &s16).unwrap();
    let q32 = gauss_oscillatory(&w, a, 1, &s32).unwrap();
    assert!((q16.value - q32.value).norm() <= q16.error.max(1e-15));
}

#[test]
fn pv_half_residue() {
    let f = |r: f64| (-r * r).exp();
    let q = pv_pole_integral(&f, 1.0, 1, &QuadratureSpec::default()).unwrap();
    assert!((q.value.im - PI * (-1.0f64).exp() / 2.0).abs() < 1e-12);
    // PV ∫₀^∞ e^{−ρ²}/(ρ²−1) dρ = −(π/2)·e^{−1}·erfi(1)
    let erfi1 = 1.650_425_758_797_542_8;
    let expected = -(PI / 2.0) * (-1.0f64).exp() * erfi1;
    assert!((q.value.re - expected).abs() < 1e-9, "{} vs {}", q.value.re, expected);
}

#[test]
fn pv_vanishing_residue_is_real() {
    let f = |r: f64| (r - 2.0) * (-r * r).exp();
    let q = pv_pole_integral(&f, 4.0, 1, &QuadratureSpec::default()).unwrap();
    assert_eq!(q.value.im, 0.0);
}

#[test]
fn pv_bound_scales_like_inverse_root() {
    let f = |r: f64| (-r * r).exp();
    let mut worst: f64 = 0.0;
    for i in 0..=12 {
        let p = 10f64.powf(-4.0 + 3.0 * i as f64 / 12.0);
        let q = pv_pole_integral(&f, p, 1, &QuadratureSpec::default()).unwrap();
        worst = worst.max(q.value.norm() * p.sqrt());
    }
    let q = pv_pole_integral(&f, 0.02, 1, &QuadratureSpec::default()).unwrap();
    assert!(q.value.norm() <= worst / 0.02f64.sqrt() * (1.0 + 1e-12));
    assert!(worst < 2.0, "C = {worst}");
}

#[test]
fn pv_sign_conjugates() {
    let f = |r: f64| (-0.5 * r * r).exp() * (1.0 + r * r);
    let a = pv_pole_integral(&f, 0.7, 1, &QuadratureSpec::default()).unwrap();
    let b = pv_pole_integral(&f, 0.7, -1, &QuadratureSpec::default()).unwrap();
    assert_eq!(a.value, b.value.conj());
}

#[test]
fn erf_values() {
    assert_eq!(complex_erf(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    let one = complex_erf(c(1.0, 0.0)).unwrap();
    assert!((one.re - 0.842_700_792_9).abs() < 1e-10);
    let z = c(1.0, 1.0);
    let v = complex_erf(z).unwrap();
    assert!((v - erf_kummer(z)).norm() < 1e-12, "{v} vs {}", erf_kummer(z));
    // continued-fraction region against the integral along the ray [0, z]
    for &z in &[c(3.5, 0.4), c(2.5, -2.0), c(5.0, -4.0), c(12.0, -9.0)] {
        let v = complex_erf(z).unwrap();
        let o = erf_ray_simpson(z);
        assert!((v - o).norm() < 1e-11 * (1.0 + o.norm()), "{z}: {v} vs {o}");
    }
    assert!(complex_erf(c(0.0, 40.0)).is_err());
}

#[test]
fn fourier_simple_poles() {
    // 1/(ik+1) has Re = 1/(1+k²), so −(1/π)∫Re cos = −e^{−t}
    let s = |k: f64| c(1.0, k).inv();
    let q = fourier_inversion(&s, 1.0, &QuadratureSpec::default()).unwrap();
    assert!((q.value + (-1.0f64).exp()).abs() < 1e-7, "{}", q.value);
    // the causal pole 1/(ik−1) gives +e^{−t}
    let s = |k: f64| c(-1.0, k).inv();
    let q = fourier_inversion(&s, 1.0, &QuadratureSpec::default()).unwrap();
    assert!((q.value - (-1.0f64).exp()).abs() < 1e-7, "{}", q.value);
    let q = causal_inversion(&s, -1.0, &QuadratureSpec::default()).unwrap();
    assert!(q.value.abs() < 1e-7, "{}", q.value);
    let q = causal_inversion(&s, 2.0, &QuadratureSpec::default()).unwrap();
    assert!((q.value - (-2.0f64).exp()).abs() < 1e-7, "{}", q.value);
}

#[test]
fn fourier_resolves_a_narrow_resonance_past_the_first_half_periods() {
    // a smooth pole plus a resonant pair at ±k0 with width γ: K(t) = −e^{−t} − 2e^{−γt} cos(k0 t)
    let (k0, g) = (2.0, 0.2);
    let s = |k: f64| c(1.0, k).inv() + c(g, k - k0).inv() + c(g, k + k0).inv();
    let spec = QuadratureSpec { radius: 3.0, ..QuadratureSpec::default() };
    for t in [5.0, 20.0, 35.0, 50.0] {
        let exact = -(-t as f64).exp() - 2.0 * (-g * t as f64).exp() * (k0 * t as f64).cos();
        let q = fourier_inversion(&s, t, &spec).unwrap();
        assert!((q.value - exact).abs() < 1e-7, "t={t}: {} vs {exact}", q.value);
    }
}

#[test]
fn fourier_of_imaginary_spectrum_is_zero() {
    let s = |k: f64| c(0.0, k / (1.0 + k * k));
    let q = fourier_inversion(&s, 3.0, &QuadratureSpec::default()).unwrap();
    assert_eq!(q.value, 0.0);
    assert!(fourier_inversion(&s, 0.0, &QuadratureSpec::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conjugation_symmetry(re in 0.0f64..2.0, im in -20.0f64..20.0, m in 0u32..4) {
        let w = |r: f64| (-0.5 * r * r).exp() * (1.0 + 0.3 * r);
        let spec = QuadratureSpec::default();
        let a = gauss_oscillatory(&w, c(re, im), m, &spec).unwrap();
        let b = gauss_oscillatory(&w, c(re, -im), m, &spec).unwrap();
        prop_assert!((a.value - b.value.conj()).norm() < 1e-14);
    }

    #[test]
    fn erf_symmetries(x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let z = c(x, y);
        let v = complex_erf(z).unwrap();
        let vc = complex_erf(z.conj()).unwrap();
        let vn = complex_erf(-z).unwrap();
        let tol = 1e-13 * (1.0 + v.norm());
        prop_assert!((vc - v.conj()).norm() < tol);
        prop_assert!((vn + v).norm() < tol);
    }

    #[test]
    fn gaussian_moments_match_closed_form(t in 0.0f64..200.0, m in 0u32..3) {
        let w = |r: f64| (-r * r).exp();
        let q = gauss_oscillatory(&w, c(0.0, t / 2.0), 2 * m, &QuadratureSpec::table()).unwrap();
        let n = m as f64;
        let gamma = [PI.sqrt(), PI.sqrt() / 2.0, 0.75 * PI.sqrt()][m as usize];
        let exact = c(1.0, t / 2.0).powf(-(n + 0.5)) * (gamma / 2.0);
        prop_assert!((q.value - exact).norm() < 1e-9, "t={} m={}: {} vs {}", t, m, q.value, exact);
    }
}
