use std::f64::consts::PI;

use hfric_core::kernels::{
    eval_ab, eval_g, eval_m, eval_m_c, eval_psi, eval_v, g_small_k_limit, grad_kernel, hess_apply, DisplacementSeries,
    RadialPotential, M_TAIL, V_TAIL,
};
use hfric_quad::{complex_erf, Complex64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn alpha(t: f64) -> Complex64 {
    c(1.0, 0.5 * t)
}

fn m_c_closed(t: f64) -> Complex64 {
    PI.powf(1.5) / alpha(t).powf(1.5)
}

fn v_closed(t: f64) -> f64 {
    4.0 * PI.powf(1.5) * c(1.0, -0.5 * t).powf(-0.5).im
}

/// erf(z)/z = Σ e_n z^{2n} with e_n = (2/√π)(−1)ⁿ/(n!(2n+1)).
fn e_coeffs(n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            fact *= k as f64;
        }
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        out.push(2.0 / PI.sqrt() * s / (fact * (2 * k + 1) as f64));
    }
    out
}

/// Closed-form Gaussian (Ψ, a, b), with the small-argument expansions of
/// `F1 = E'/z` and `F2 = (E'' − E'/z)/z²` where the direct forms cancel.
fn psi_closed(t: f64, r: f64) -> (Complex64, Complex64, Complex64) {
    let al = alpha(t);
    let sa = al.sqrt();
    let z = r / (2.0 * sa);
    if z.norm() < 0.8 {
        let e = e_coeffs(40);
        let z2 = z * z;
        let mut psi = c(0.0, 0.0);
        let mut f1 = c(0.0, 0.0);
        let mut f2 = c(0.0, 0.0);
        let mut p = c(1.0, 0.0);
        for n in 0..40 {
            psi += p * e[n];
            if n + 1 < 40 {
                f1 += p * (2.0 * (n + 1) as f64 * e[n + 1]);
            }
            if n + 2 < 40 {
                f2 += p * (4.0 * ((n + 2) * (n + 1)) as f64 * e[n + 2]);
            }
            p *= z2;
        }
        let psi = psi * (PI * PI) / sa;
        let a = f1 * (PI * PI / 4.0) / al.powf(1.5);
        let b = f2 * (PI * PI / 16.0) / al.powf(2.5);
        return (psi, a, b);
    }
    let erf = complex_erf(z).unwrap();
    let g = (-z * z).exp();
    let psi = erf * (2.0 * PI * PI / r);
    let d1 = (g / ((PI * al).sqrt() * r) - erf / (r * r)) * (2.0 * PI * PI);
    let d2 = (-z * g / (al * PI.sqrt() * r) - g * 2.0 / ((PI * al).sqrt() * r * r) + erf * 2.0 / (r * r * r))
        * (2.0 * PI * PI);
    let a = d1 / r;
    let b = (d2 - a) / (r * r);
    (psi, a, b)
}

#[test]
fn m_at_origin_and_closed_form() {
    let pot = RadialPotential::default();
    assert!((eval_m(&pot, 0.0).unwrap() - PI.powf(1.5)).abs() < 1e-10);
    for t in [0.0, 0.3, 1.0, 4.0, 15.9, 16.0, 40.0, 300.0, 1e4] {
        let m = eval_m_c(&pot, t).unwrap();
        assert!((m - m_c_closed(t)).norm() < 1e-8, "t={t}: {m} vs {}", m_c_closed(t));
    }
}

#[test]
fn v_closed_form_and_limits() {
    let pot = RadialPotential::default();
    for t in [1e-3, 0.5, 2.0, 10.0, 17.0, 250.0, 1e4] {
        let v = eval_v(&pot, t).unwrap();
        assert!((v - v_closed(t)).abs() < 1e-8, "t={t}: {v} vs {}", v_closed(t));
    }
    assert!(eval_v(&pot, 1e-9).unwrap().abs() < 1e-7);
    assert!(eval_v(&pot, 0.0).is_err());
}

#[test]
fn correlation_asymptotes() {
    let pot = RadialPotential::default();
    for t in [1e3f64, 3e3, 1e4] {
        let rm = t.powf(1.5) * eval_m(&pot, t).unwrap() / M_TAIL;
        let rv = t.sqrt() * eval_v(&pot, t).unwrap() / V_TAIL;
        assert!((0.99..=1.01).contains(&rm), "t={t}: {rm}");
        assert!((0.99..=1.01).contains(&rv), "t={t}: {rv}");
    }
}

#[test]
fn scaled_to_zero_potential() {
    let pot = RadialPotential::default().scaled(0.0);
    assert_eq!(eval_m(&pot, 2.0).unwrap(), 0.0);
    assert_eq!(eval_v(&pot, 2.0).unwrap(), 0.0);
}

#[test]
fn g_small_k_expansion() {
    let pot = RadialPotential::default();
    let lead = g_small_k_limit(1.0);
    assert!((lead.norm() - 2f64.powf(1.5) * PI * PI * 2f64.sqrt()).abs() < 1e-12);
    // the O(k) coefficient for |Ŵ|² = e^{−ρ²} is 16iπ ∫(|Ŵ|²−1)/ρ² dρ = −16iπ^{3/2}
    let c_lin = c(0.0, -16.0 * PI.powf(1.5));
    for k in [1e-4, 1e-5, 1e-6] {
        let g = eval_g(&pot, k).unwrap();
        let lin = (g - lead * k.sqrt()) / k;
        assert!((lin - c_lin).norm() / c_lin.norm() < 0.02, "k={k}: {lin}");
        let rel = (g / k.sqrt() - lead).norm() / lead.norm();
        let predicted = 4.0 * k.sqrt() / PI.sqrt();
        assert!((rel - predicted).abs() < 0.05 * predicted, "k={k}: {rel} vs {predicted}");
    }
}

#[test]
fn g_reflection_and_decay() {
    let pot = RadialPotential::default();
    for k in [0.3, 1.0, 1.9, 4.0] {
        let gp = eval_g(&pot, k).unwrap();
        let gm = eval_g(&pot, -k).unwrap();
        assert!((gm - gp.conj()).norm() < 1e-9, "k={k}");
        // Re G(k) = −2^{3/2}π²√k e^{−2k} for this profile
        let re = -2f64.powf(1.5) * PI * PI * k.sqrt() * (-2.0 * k).exp();
        assert!((gp.re - re).abs() < 1e-8, "k={k}: {} vs {re}", gp.re);
    }
    let big = [10.0, 100.0, 1000.0].map(|k| eval_g(&pot, k).unwrap().norm());
    assert!(big[0] > big[1] && big[1] > big[2] && big[2] < 0.1, "{big:?}");
    assert!(eval_g(&pot, 1e-13).is_err());
}

#[test]
fn psi_matches_erf_closed_form() {
    let pot = RadialPotential::default();
    let (psi, d1, _) = eval_psi(&pot, 0.0, 1.0).unwrap();
    let erf_half = 0.520_499_877_813_046_5;
    assert!((psi.re - 2.0 * PI * PI * erf_half).abs() < 1e-10);
    assert!(psi.im.abs() < 1e-12);
    assert!(d1.norm() > 0.0);
    for t in [0.0, 0.7, 5.0, 20.0, 200.0, 1e4] {
        for r in [0.0, 1e-4, 0.3, 1.0, 2.5, 6.0, 15.0, 50.0] {
            let (psi, d1, d2) = eval_psi(&pot, t, r).unwrap();
            let (pc, ac, bc) = psi_closed(t, r);
            let scale = 1.0 + pc.norm();
            assert!((psi - pc).norm() < 1e-8 * scale, "psi t={t} r={r}: {psi} vs {pc}");
            assert!((d1 - ac * r).norm() < 1e-8 * scale, "d1 t={t} r={r}: {d1} vs {}", ac * r);
            assert!((d2 - (ac + bc * r * r)).norm() < 1e-8 * scale, "d2 t={t} r={r}");
        }
    }
}

#[test]
fn one_third_identity() {
    let pot = RadialPotential::default();
    for t in [0.0, 0.5, 3.0, 30.0, 1e3] {
        let (a, _) = eval_ab(&pot, t, 0.0).unwrap();
        let m = eval_m_c(&pot, t).unwrap();
        assert!((a + m / 3.0).norm() < 1e-8, "t={t}");
        let h = hess_apply(&pot, t, [0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        assert!((h[2] + m.re / 3.0).abs() < 1e-8 && h[0] == 0.0 && h[1] == 0.0);
    }
    let (_, d1, _) = eval_psi(&pot, 2.0, 1e-9).unwrap();
    assert!(d1.norm() < 1e-8);
}

#[test]
fn b_at_origin_is_fourth_moment() {
    let pot = RadialPotential::default();
    // b(τ, 0) = (4π/15) m₄ with m₄ = Γ(5/2)/(2α^{5/2})
    for t in [0.0, 2.0, 50.0] {
        let (_, b) = eval_ab(&pot, t, 0.0).unwrap();
        let m4 = 0.75 * PI.sqrt() / (2.0 * alpha(t).powf(2.5));
        assert!((b - m4 * (4.0 * PI / 15.0)).norm() < 1e-9);
    }
}

#[test]
fn hessian_decay_bound() {
    // |Re H(t, Y)·P| (1+t)^{3/2} stays bounded over |Y| ≤ 0.5√t
    let pot = RadialPotential::default();
    let mut sup_late = 0.0f64;
    let mut at_100 = 0.0f64;
    for t in [100.0f64, 300.0, 1e3, 3e3, 1e4] {
        for frac in [0.0, 0.25, 0.5] {
            let y = [0.0, frac * t.sqrt() * 0.6, frac * t.sqrt() * 0.8];
            let h = hess_apply(&pot, t, y, [0.0, 0.0, 1.0]).unwrap();
            let v = (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt() * (1.0 + t).powf(1.5);
            if t == 100.0 {
                at_100 = at_100.max(v);
            }
            sup_late = sup_late.max(v);
        }
    }
    assert!(sup_late.is_finite() && sup_late < 2.0 * at_100, "{sup_late} vs {at_100}");
}

#[test]
fn series_object_matches_pointwise() {
    let pot = RadialPotential::default();
    for t in [0.05, 3.0, 80.0] {
        let s = DisplacementSeries::new(&pot, t, 1.5).unwrap();
        for r in [0.0, 0.4, 1.5] {
            let (a, b) = eval_ab(&pot, t, r).unwrap();
            let (ra, rb) = s.re_ab(r * r);
            assert!((ra - a.re).abs() < 1e-10 && (rb - b.re).abs() < 1e-10);
        }
    }
}

fn rotation(ax: f64, ay: f64, az: f64) -> [[f64; 3]; 3] {
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (sz, cz) = az.sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rz = [[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]];
    mul(&rz, &mul(&ry, &rx))
}

fn mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn apply(r: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|k| r[i][k] * v[k]).sum())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hessian_rotation_covariance(
        ax in 0.0..6.3f64, ay in 0.0..6.3f64, az in 0.0..6.3f64,
        y in prop::array::uniform3(-1.0..1.0f64),
        p in prop::array::uniform3(-1.0..1.0f64),
        t in 0.0..50.0f64,
    ) {
        let pot = RadialPotential::default();
        let rot = rotation(ax, ay, az);
        let lhs = hess_apply(&pot, t, apply(&rot, y), apply(&rot, p)).unwrap();
        let rhs = apply(&rot, hess_apply(&pot, t, y, p).unwrap());
        for i in 0..3 {
            prop_assert!((lhs[i] - rhs[i]).abs() < 1e-10);
        }
        let g1 = grad_kernel(&pot, t, apply(&rot, y)).unwrap();
        let g2 = apply(&rot, grad_kernel(&pot, t, y).unwrap());
        for i in 0..3 {
            prop_assert!((g1[i] - g2[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn hessian_linear_in_p(
        y in prop::array::uniform3(-2.0..2.0f64),
        p in prop::array::uniform3(-1.0..1.0f64),
        q in prop::array::uniform3(-1.0..1.0f64),
        s in -3.0..3.0f64,
    ) {
        let pot = RadialPotential::default();
        let comb: [f64; 3] = std::array::from_fn(|i| p[i] + s * q[i]);
        let hp = hess_apply(&pot, 1.5, y, p).unwrap();
        let hq = hess_apply(&pot, 1.5, y, q).unwrap();
        let hc = hess_apply(&pot, 1.5, y, comb).unwrap();
        for i in 0..3 {
            prop_assert!((hc[i] - hp[i] - s * hq[i]).abs() < 1e-11);
        }
    }
}
