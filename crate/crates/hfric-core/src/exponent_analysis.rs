//! Contraction integrals `Ω, Ω₁, Ω₂`, the admissible interval of decay rates, the
//! best-decay equations of the linearized law, and a numerical audit of the three
//! terms that make up the linear part of the fixed-point map.

use std::f64::consts::{FRAC_PI_2, PI};

use hfric_quad::{gauss_legendre, tanh_sinh};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::CouplingConstants;
use crate::memory_kernel::{tail_amplitude, Correlations, MemoryKernel};

const OMEGA_TARGET: f64 = 1e-13;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// `(r^{−1/2} − r^{−δ})/(1 − 2δ)` times `r^{1/2}`, written as `−expm1(ε ln r)/(2ε)` with
/// `ε = ½ − δ` so that `δ = ½` is a regular point.
fn omega1_factor(ln_r: f64, delta: f64) -> f64 {
    let eps = 0.5 - delta;
    if eps.abs() < 1e-4 {
        // −ln r/2 · (1 + ε ln r/2 + (ε ln r)²/6)
        let x = eps * ln_r;
        -0.5 * ln_r * (1.0 + 0.5 * x + x * x / 6.0)
    } else {
        -(eps * ln_r).exp_m1() / (2.0 * eps)
    }
}

/// The two integrands after `r = sin²θ`, times the Jacobian `jac = e^{ln_jac}` of any further
/// substitution. `ln_theta = ln θ` is passed separately so that `θ` may underflow.
fn omega_parts(ln_theta: f64, dr: f64, ln_jac: f64, delta: f64) -> (f64, f64) {
    let th = ln_theta.exp();
    let sinc = if th < 1e-4 { 1.0 - th * th / 6.0 } else { th.sin() / th };
    let ln_s = ln_theta + sinc.ln();
    let ln_r = 2.0 * ln_s;
    let c = dr.sin();
    let eps = 0.5 - delta;
    let f1 = if ln_jac == 0.0 {
        omega1_factor(ln_r, delta)
    } else {
        // (1 − r^ε)/(2ε) · jac with both powers combined in the exponent
        (ln_jac.exp() - (eps * ln_r + ln_jac).exp()) / (2.0 * eps)
    };
    let p1 = 2.0 / (1.0 + c) * f1;
    let p2 = 2.0 / (1.0 + c) * (ln_s + eps * ln_r + ln_jac).exp();
    (p1, p2)
}

/// `∫₀^{π/2} part(θ) dθ`, split at `π/4`. On the left piece `θ = φ^p` with
/// `p = max(1, 1/(2−2δ))` cancels the `θ^{1−2δ}` endpoint power, which tanh-sinh
/// alone cannot resolve once `δ` approaches 1.
fn theta_integral(delta: f64, part: &dyn Fn(f64, f64, f64) -> f64) -> Result<f64> {
    let p = (0.5 / (1.0 - delta)).max(1.0);
    let target = OMEGA_TARGET * p;
    let quarter = 0.25 * PI;
    let left = tanh_sinh(
        &|_, dl, _| {
            let ln_theta = p * dl.ln();
            let ln_jac = if p == 1.0 { 0.0 } else { p.ln() + (p - 1.0) * dl.ln() };
            part(ln_theta, FRAC_PI_2 - ln_theta.exp(), ln_jac)
        },
        0.0,
        quarter.powf(1.0 / p),
        target,
    )?;
    let right = tanh_sinh(&|th, _, dr| part(th.ln(), dr, 0.0), quarter, FRAC_PI_2, target)?;
    Ok(left.value + right.value)
}

/// `Ω₁(δ)`.
pub fn omega1(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(theta_integral(delta, &|lt, dr, lj| omega_parts(lt, dr, lj, delta).0)? / PI)
}

/// `Ω₂(δ)`.
pub fn omega2(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(theta_integral(delta, &|lt, dr, lj| omega_parts(lt, dr, lj, delta).1)? / PI)
}

/// `Ω(δ)`, integrated in one pass over the combined integrand.
pub fn omega(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    theta_integral(delta, &|lt, dr, lj| {
        let (a, b) = omega_parts(lt, dr, lj, delta);
        a + b
    })
}

/// Scan of `Ω` over `(0, 1)` and the supremum of `{δ : Ω(δ) < π}`.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaInterval {
    /// `(δ, Ω(δ))` on the scan grid.
    pub samples: Vec<(f64, f64)>,
    pub i_sup: f64,
    pub bracket_width: f64,
    /// The admissible scan points form one contiguous run starting at the first sample.
    pub contiguous: bool,
}

impl DeltaInterval {
    pub fn contains(&self, delta: f64) -> Result<bool> {
        Ok(omega(delta)? < PI)
    }
}

/// Scan `Ω` with spacing `resolution` and bisect the crossing `Ω = π`.
pub fn interval_i(resolution: f64) -> Result<DeltaInterval> {
    if !(resolution > 0.0 && resolution <= 1e-3) {
        return Err(Error::InvalidArgument(format!("resolution must be in (0, 1e-3], got {resolution}")));
    }
    let n = (1.0 / resolution).round() as usize;
    let mut samples = Vec::with_capacity(n);
    for i in 1..n {
        let d = i as f64 * resolution;
        samples.push((d, omega(d)?));
    }
    let admissible: Vec<bool> = samples.iter().map(|s| s.1 < PI).collect();
    let last_in = admissible.iter().rposition(|a| *a).ok_or_else(|| Error::Contradiction("I is empty".into()))?;
    let contiguous = admissible[..=last_in].iter().all(|a| *a) && admissible[last_in + 1..].iter().all(|a| !*a);
    let (mut lo, mut hi) = (samples[last_in].0, samples.get(last_in + 1).map_or(1.0 - 1e-9, |s| s.0));
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if omega(mid)? < PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DeltaInterval { samples, i_sup: 0.5 * (lo + hi), bracket_width: hi - lo, contiguous })
}

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `∫₀^∞ e^{−t} t^{−a} dt` by quadrature, for `a < 1`, as an independent check of `Γ(1−a)`.
/// With `t = u^{1/(1−a)}` the integrand becomes `e^{−u^{1/(1−a)}}/(1−a)`, smooth on `[0, ∞)`.
pub fn gamma_by_quadrature(a: f64) -> Result<f64> {
    if !(a < 1.0) {
        return Err(Error::InvalidArgument(format!("need a < 1, got {a}")));
    }
    let p = 1.0 / (1.0 - a);
    let upper = 60f64.powf(1.0 - a);
    let f = |u: f64, _: f64, _: f64| (-u.powf(p)).exp() * p;
    let q = tanh_sinh(&f, 0.0, upper, 1e-13)?;
    Ok(q.value)
}

/// Residual of `Γ(1−δ) = Γ(½−δ)/(√π(1+2δ))`.
pub fn best1_residual(delta: f64) -> f64 {
    gamma(1.0 - delta) - gamma(0.5 - delta) / (PI.sqrt() * (1.0 + 2.0 * delta))
}

/// `(left, right)` sides of `Γ(1−δ)/(δ(1−2δ)√π) = Γ(½−δ)`.
pub fn best2_sides(delta: f64) -> (f64, f64) {
    (gamma(1.0 - delta) / (delta * (1.0 - 2.0 * delta) * PI.sqrt()), gamma(0.5 - delta))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRoot {
    pub root: f64,
    pub bracket_width: f64,
    pub residual: f64,
    /// Sign changes on a 10³-point scan of `(0.01, 0.49)`.
    pub sign_changes: usize,
    /// The residual is positive left of its scan maximum and strictly decreasing from there on,
    /// so the root is unique.
    pub monotone_past_peak: bool,
}

/// The unique root of the integrable best-decay equation in `(0.01, 0.49)`.
pub fn best_decay_root() -> Result<DecayRoot> {
    let (mut lo, mut hi) = (0.01, 0.49);
    let (flo, fhi) = (best1_residual(lo), best1_residual(hi));
    if flo.signum() == fhi.signum() {
        return Err(Error::Contradiction(format!(
            "best-decay residual has no sign change on (0.01, 0.49): {flo}, {fhi}"
        )));
    }
    let scan: Vec<f64> = (0..=1000).map(|i| best1_residual(0.01 + 0.48 * i as f64 / 1000.0)).collect();
    let sign_changes = scan.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    let peak = scan
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map_or(0, |(i, _)| i);
    let monotone_past_peak =
        scan[..peak].iter().all(|v| *v > 0.0) && scan[peak..].windows(2).all(|w| w[1] < w[0]);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if best1_residual(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(DecayRoot { root, bracket_width: hi - lo, residual: best1_residual(root), sign_changes, monotone_past_peak })
}

#[derive(Clone, Debug, Serialize)]
pub struct Best2Report {
    pub scan_points: usize,
    pub sign_changes: usize,
    /// Smallest `left − right` over the scan.
    pub min_residual: f64,
    /// Smallest `(left − right)/right` over the scan.
    pub min_relative_gap: f64,
    /// `left`, `right` at `δ = 0.16`.
    pub at_016: (f64, f64),
}

/// Scan the non-integrable best-decay equation on `[0.01, 0.49]`; a sign change is a contradiction.
pub fn verify_no_root_best2() -> Result<Best2Report> {
    let n = 4801;
    let mut sign_changes = 0;
    let mut prev: Option<f64> = None;
    let mut min_residual = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    for i in 0..n {
        let d = 0.01 + 0.48 * i as f64 / (n - 1) as f64;
        let (l, r) = best2_sides(d);
        let res = l - r;
        if let Some(p) = prev {
            if p.signum() != res.signum() {
                sign_changes += 1;
            }
        }
        prev = Some(res);
        min_residual = min_residual.min(res);
        min_rel = min_rel.min(res / r);
    }
    let report = Best2Report {
        scan_points: n,
        sign_changes,
        min_residual,
        min_relative_gap: min_rel,
        at_016: best2_sides(0.16),
    };
    if sign_changes > 0 {
        return Err(Error::Contradiction(format!("best2 residual changes sign {sign_changes} times")));
    }
    Ok(report)
}

/// Bound constants `sup_t |Γ_k(t)| t^{1/2+δ} / ‖h‖_{δ,T}` over `t ∈ [T, 100T]`.
#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub delta: f64,
    pub t_cut: f64,
    pub norm: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// The same constants for the leading-order approximants of `Γ₁` and `Γ₃`.
    pub tilde_gamma1: f64,
    pub tilde_gamma3: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub samples: usize,
}

/// Graded breakpoints on `[a, b]`, refined toward both ends (width `first` doubling to `b−a`/4).
fn two_sided_breaks(a: f64, b: f64, first: f64) -> Vec<f64> {
    let len = b - a;
    let mut left = vec![0.0];
    let mut w = first;
    while left.last().unwrap() + w < 0.5 * len {
        let next = left.last().unwrap() + w;
        left.push(next);
        w = (2.0 * w).min(0.25 * len);
    }
    let mut out: Vec<f64> = left.iter().map(|x| a + x).collect();
    out.push(a + 0.5 * len);
    out.extend(left.iter().rev().map(|x| b - x));
    out.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    out
}

fn integrate(f: &mut dyn FnMut(f64) -> Result<f64>, breaks: &[f64]) -> Result<f64> {
    let rule = gauss_legendre(20);
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            acc += wt * h * f(c + h * x)?;
        }
    }
    Ok(acc)
}

/// `∫_a^b h` on a fixed number of log-graded panels, so the result is smooth in `a` and `b`.
fn integral_of(h: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = 24;
    let breaks: Vec<f64> = (0..=n).map(|i| a * (b / a).powf(i as f64 / n as f64)).collect();
    let mut f = |x: f64| Ok(h(x));
    integrate(&mut f, &breaks).expect("plain closure")
}

/// Evaluate `Γ₁, Γ₂, Γ₃` on `(1 − χ_T) h` at log-spaced `t ∈ [T, 100T]`.
pub fn contraction_audit(
    h: &dyn Fn(f64) -> f64,
    delta: f64,
    t_cut: f64,
    correlations: &Correlations,
    constants: &CouplingConstants,
    kernel: &MemoryKernel,
) -> Result<AuditReport> {
    check_delta(delta)?;
    if delta >= 0.5 {
        return Err(Error::InvalidArgument("the audit covers delta < 1/2 only".into()));
    }
    if !(t_cut > 0.0) {
        return Err(Error::InvalidArgument("T must be > 0".into()));
    }
    let z = constants.z();
    let p = 0.5 + delta;
    let samples = 25;
    let ts: Vec<f64> = (0..samples).map(|i| t_cut * 100f64.powf(i as f64 / (samples - 1) as f64)).collect();
    let norm = {
        let fine: Vec<f64> = (0..2000).map(|i| t_cut * 100f64.powf(i as f64 / 1999.0)).collect();
        fine.iter().map(|t| t.powf(p) * h(*t).abs()).fold(0.0, f64::max)
    };
    if norm == 0.0 {
        return Ok(AuditReport {
            delta,
            t_cut,
            norm,
            gamma1: 0.0,
            gamma2: 0.0,
            gamma3: 0.0,
            tilde_gamma1: 0.0,
            tilde_gamma3: 0.0,
            omega1: omega1(delta)?,
            omega2: omega2(delta)?,
            samples,
        });
    }
    let (mut g1, mut g2, mut g3, mut tg1, mut tg3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let amp = tail_amplitude();
    for &t in &ts {
        let k_t = kernel.eval(t);
        let tol = 1e-8 * norm * t.powf(-p);
        let total = integral_of(h, t_cut, t);
        // Γ₁: −Z ∫₀ᵗ [K(t−s) − K(t)] M(s) ∫_{max(s,T)}^t h ds
        let mut f1 = |s: f64| -> Result<f64> {
            let inner = if s <= t_cut { total } else { integral_of(h, s, t) };
            Ok((kernel.eval(t - s) - k_t) * correlations.m(s)? * inner)
        };
        let mut breaks = two_sided_breaks(0.0, t, 0.25);
        if t > t_cut {
            breaks.push(t_cut);
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        }
        let gamma1 = -z * integrate(&mut f1, &breaks)?;
        // Γ₂: I(t) ∫_T^t h, with I = −K̇
        let gamma2 = -kernel.eval_derivative(t) * total;
        // Γ₃: Z K(t) ∫_T^t [V(t−s) − V(t)] h(s) ds
        let v_t = correlations.v(t)?;
        let gamma3 = if t > t_cut {
            let mut f3 = |s: f64| Ok((correlations.v(t - s)? - v_t) * h(s));
            z * k_t * integrate(&mut f3, &two_sided_breaks(t_cut, t, 0.25))?
        } else {
            0.0
        };
        // approximants with Z K̃ = ¼π^{−5/2} τ^{−1/2}, M̃ = −2π^{3/2} τ^{−3/2}, Ṽ = 4π^{3/2} τ^{−1/2}
        let tilde1 = if t > t_cut {
            // ZK̃M̃ = −(1/2π) τ^{−1/2} s^{−3/2}; the bracket vanishes like s at the origin
            let f = |s: f64, lag: f64| {
                let inner = if s <= t_cut { total } else { integral_of(h, s, t) };
                (lag.powf(-0.5) - t.powf(-0.5)) * s.powf(-1.5) * inner / (2.0 * PI)
            };
            let a = tanh_sinh(&|s, dl, _| f(dl, t - s), 0.0, t_cut, tol)?.value;
            let b = tanh_sinh(&|s, _, dr| f(s, dr), t_cut, t, tol)?.value;
            a + b
        } else {
            0.0
        };
        let tilde3 = if t > t_cut {
            let f = |_s: f64, _dl: f64, dr: f64| {
                let s = t - dr;
                4.0 * PI.powf(1.5) * (dr.powf(-0.5) - t.powf(-0.5)) * h(s)
            };
            amp * t.powf(-0.5) * tanh_sinh(&f, t_cut, t, tol * t.sqrt() / amp)?.value
        } else {
            0.0
        };
        let w = t.powf(p);
        g1 = g1.max(gamma1.abs() * w);
        g2 = g2.max(gamma2.abs() * w);
        g3 = g3.max(gamma3.abs() * w);
        tg1 = tg1.max(tilde1.abs() * w);
        tg3 = tg3.max(tilde3.abs() * w);
    }
    let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
    Ok(AuditReport {
        delta,
        t_cut,
        norm,
        gamma1: g1 * scale,
        gamma2: g2 * scale,
        gamma3: g3 * scale,
        tilde_gamma1: tg1 * scale,
        tilde_gamma3: tg3 * scale,
        omega1: omega1(delta)?,
        omega2: omega2(delta)?,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_removable_point() {
        let d = 0.3;
        assert!((omega(d).unwrap() - PI * (omega1(d).unwrap() + omega2(d).unwrap())).abs() < 1e-10);
        let a = omega1(0.5 - 2e-4).unwrap();
        let b = omega1(0.5).unwrap();
        let c = omega1(0.5 + 2e-4).unwrap();
        assert!((b - 0.5 * (a + c)).abs() < 1e-7, "{a} {b} {c}");
    }

    #[test]
    fn breaks_cover_range() {
        let b = two_sided_breaks(0.0, 10.0, 0.25);
        assert_eq!(b[0], 0.0);
        assert_eq!(*b.last().unwrap(), 10.0);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
    }
}
