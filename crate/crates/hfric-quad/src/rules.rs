use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::spec::{QuadError, QuadResult, QuadratureSpec};

/// Values a quadrature can accumulate: reals and complex numbers.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Default
{
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integral over [a, b].
    #[inline]
    pub fn apply<T: Scalar>(&self, f: &mut dyn FnMut(f64) -> T, a: f64, b: f64) -> T {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = T::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + h * x) * (*w);
        }
        acc * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached Gauss–Legendre rule of order `n`.
pub fn gauss_legendre(n: usize) -> Arc<GaussLegendre> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("rule cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
}

pub(crate) struct PanelRule {
    hi: Arc<GaussLegendre>,
    lo: Arc<GaussLegendre>,
}

impl PanelRule {
    pub(crate) fn new(nodes: usize) -> Self {
        Self { hi: gauss_legendre(nodes), lo: gauss_legendre(nodes / 2) }
    }

    /// Panel value and error estimate |Q_n − Q_{n/2}|.
    pub(crate) fn panel<T: Scalar>(&self, f: &mut dyn FnMut(f64) -> T, a: f64, b: f64) -> (T, f64) {
        let q_hi = self.hi.apply(f, a, b);
        let q_lo = self.lo.apply(f, a, b);
        (q_hi, (q_hi - q_lo).magnitude())
    }

    pub(crate) fn evals_per_panel(&self) -> usize {
        self.hi.nodes.len() + self.lo.nodes.len()
    }

    /// Adaptive bisection of one panel against an absolute local target.
    pub(crate) fn adaptive<T: Scalar>(
        &self,
        f: &mut dyn FnMut(f64) -> T,
        a: f64,
        b: f64,
        local_target: f64,
        evals: &mut usize,
    ) -> Result<(T, f64), QuadError> {
        self.bisect(f, a, b, local_target, 0, evals)
    }

    fn bisect<T: Scalar>(
        &self,
        f: &mut dyn FnMut(f64) -> T,
        a: f64,
        b: f64,
        target: f64,
        depth: usize,
        evals: &mut usize,
    ) -> Result<(T, f64), QuadError> {
        let (q, e) = self.panel(f, a, b);
        *evals += self.evals_per_panel();
        if !q.is_finite_value() {
            return Err(QuadError::NotFinite { at: 0.5 * (a + b) });
        }
        if e <= target || depth >= 30 || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            return Ok((q, e));
        }
        let m = 0.5 * (a + b);
        let (q1, e1) = self.bisect(f, a, m, 0.5 * target, depth + 1, evals)?;
        let (q2, e2) = self.bisect(f, m, b, 0.5 * target, depth + 1, evals)?;
        Ok((q1 + q2, e1 + e2))
    }
}

/// Adaptive integration over consecutive panels `breaks[i]..breaks[i+1]`.
/// The target is shared among panels in proportion to their width.
pub fn integrate_panels<T: Scalar>(
    f: &mut dyn FnMut(f64) -> T,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult<T>, QuadError> {
    spec.validate()?;
    if breaks.len() < 2 {
        return Ok(QuadResult { value: T::default(), error: 0.0, evaluations: 0 });
    }
    let rule = PanelRule::new(spec.nodes);
    let total = (breaks[breaks.len() - 1] - breaks[0]).abs().max(f64::MIN_POSITIVE);
    let mut value = T::default();
    let mut error = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        let share = spec.target * (w[1] - w[0]).abs() / total;
        let (q, e) = rule.adaptive(f, w[0], w[1], share, &mut evals)?;
        value = value + q;
        error += e;
    }
    if error > spec.target {
        return Err(QuadError::NonConvergence {
            estimate: error,
            target: spec.target,
            context: "panel integration",
        });
    }
    Ok(QuadResult { value, error, evaluations: evals })
}

/// Breakpoints on [a, b] with spacing at most `max_width`.
pub(crate) fn uniform_breaks(a: f64, b: f64, max_width: f64) -> Vec<f64> {
    let n = (((b - a) / max_width).ceil() as usize).max(1);
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Breakpoints on [a, b] that grow geometrically from `a` starting at `first`,
/// capped at `max_width`.
pub(crate) fn graded_breaks(a: f64, b: f64, first: f64, max_width: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut w = first.min(max_width).max(1e-300);
    let mut x = a;
    while x < b {
        let next = (x + w).min(b);
        // avoid a sliver at the end
        let next = if b - next < 0.25 * w { b } else { next };
        out.push(next);
        x = next;
        w = (2.0 * w).min(max_width);
    }
    out
}
