use std::f64::consts::FRAC_PI_2;

use crate::spec::{QuadError, QuadResult};

/// Double-exponential quadrature on `[a, b]` for integrands with algebraic or
/// logarithmic endpoint singularities.
///
/// `f(x, dl, dr)` receives the abscissa together with its distances to the left
/// and right endpoints, so the integrand can form `x − a` and `b − x` without
/// cancellation.
pub fn tanh_sinh(
    f: &dyn Fn(f64, f64, f64) -> f64,
    a: f64,
    b: f64,
    target: f64,
) -> Result<QuadResult<f64>, QuadError> {
    if !(b > a) {
        return Err(QuadError::InvalidArgument(format!("need a < b, got [{a}, {b}]")));
    }
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let t_max = 6.5;
    let mut h = 0.5;
    let mut evals = 0usize;

    let node = |t: f64| -> Option<(f64, f64, f64)> {
        let s = FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        // 1 − tanh(s) computed without cancellation
        let one_minus = 1.0 / (ch * ch * (1.0 + s.tanh()));
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        if w == 0.0 || one_minus == 0.0 {
            return None;
        }
        Some((one_minus, 2.0 - one_minus, w))
    };

    let eval_sum = |h: f64, offset_only: bool, evals: &mut usize| -> Result<f64, QuadError> {
        let mut sum = 0.0;
        let mut k = if offset_only { 1 } else { 0 };
        let step = if offset_only { 2 } else { 1 };
        if !offset_only {
            let v = f(c, half, half);
            if !v.is_finite() {
                return Err(QuadError::NotFinite { at: c });
            }
            sum += FRAC_PI_2 * v;
            *evals += 1;
            k = 1;
        }
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            let Some((om, op, w)) = node(t) else { break };
            // x = c ± half·tanh(s); distances to the nearer endpoint are half·(1 − tanh)
            let dl_right = half * op;
            let dr_right = half * om;
            let vr = f(b - dr_right, dl_right, dr_right);
            let vl = f(a + dr_right, dr_right, dl_right);
            *evals += 2;
            if vr.is_finite() {
                sum += w * vr;
            }
            if vl.is_finite() {
                sum += w * vl;
            }
            k += step;
        }
        Ok(sum)
    };

    let mut total = eval_sum(h, false, &mut evals)?;
    let mut estimate = total * h * half;
    for _level in 0..10 {
        h *= 0.5;
        total += eval_sum(h, true, &mut evals)?;
        let next = total * h * half;
        let err = (next - estimate).abs();
        estimate = next;
        if err < 0.1 * target && _level >= 2 {
            return Ok(QuadResult { value: estimate, error: err, evaluations: evals });
        }
    }
    Err(QuadError::NonConvergence { estimate: f64::NAN, target, context: "tanh-sinh" })
}
