//! Online history sums `c_m = Σ_{j<m} M_{m−j} y_j` for Volterra time stepping.
//!
//! The unknowns are produced one at a time by a step callback, so the full
//! convolution cannot be formed up front. Divide and conquer over the index range
//! adds each left half's contribution to its right half with one FFT product,
//! giving `O(N log² N)` work overall.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Block size below which history sums are accumulated directly.
const LEAF: usize = 64;

pub struct HistoryConvolver<'k> {
    kernel: &'k [f64],
    planner: FftPlanner<f64>,
    plans: HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
    spectra: HashMap<(usize, usize), Vec<Complex64>>,
}

impl<'k> HistoryConvolver<'k> {
    /// `kernel[d]` is the weight of lag `d`; it must cover every lag that will be requested.
    pub fn new(kernel: &'k [f64]) -> Self {
        Self { kernel, planner: FftPlanner::new(), plans: HashMap::new(), spectra: HashMap::new() }
    }

    /// Produce `y_0 .. y_{n−1}`, calling `step(m, c_m)` in increasing `m`.
    pub fn run(&mut self, n: usize, step: &mut dyn FnMut(usize, f64) -> f64) -> Vec<f64> {
        assert!(self.kernel.len() >= n, "kernel shorter than the requested history");
        let mut y = vec![0.0; n];
        let mut c = vec![0.0; n];
        self.solve(0, n, &mut y, &mut c, step);
        y
    }

    fn solve(&mut self, lo: usize, hi: usize, y: &mut [f64], c: &mut [f64], step: &mut dyn FnMut(usize, f64) -> f64) {
        if hi - lo <= LEAF {
            for m in lo..hi {
                let mut acc = 0.0;
                for j in lo..m {
                    acc += self.kernel[m - j] * y[j];
                }
                c[m] += acc;
                y[m] = step(m, c[m]);
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        self.solve(lo, mid, y, c, step);
        let cross = self.convolve_block(&y[lo..mid], hi - lo);
        for m in mid..hi {
            c[m] += cross[m - lo];
        }
        self.solve(mid, hi, y, c, step);
    }

    /// `out[i] = Σ_j src[j]·kernel[i − j]` for `i < len`.
    fn convolve_block(&mut self, src: &[f64], len: usize) -> Vec<f64> {
        let size = (src.len() + len).next_power_of_two();
        let (fwd, inv) = self.plans(size);
        let kernel = self.kernel;
        let spectrum = self.spectra.entry((len, size)).or_insert_with(|| {
            let mut buf: Vec<Complex64> = (0..size)
                .map(|i| Complex64::new(if i < len { kernel[i] } else { 0.0 }, 0.0))
                .collect();
            fwd.process(&mut buf);
            buf
        });
        let mut buf: Vec<Complex64> = (0..size)
            .map(|i| Complex64::new(if i < src.len() { src[i] } else { 0.0 }, 0.0))
            .collect();
        fwd.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(spectrum.iter()) {
            *b *= s;
        }
        inv.process(&mut buf);
        let scale = 1.0 / size as f64;
        buf[..len].iter().map(|v| v.re * scale).collect()
    }

    fn plans(&mut self, size: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let planner = &mut self.planner;
        self.plans
            .entry(size)
            .or_insert_with(|| (planner.plan_fft_forward(size), planner.plan_fft_inverse(size)))
            .clone()
    }
}

/// Full linear convolution `out[i] = Σ_{j≤i} a[j]·b[i−j]` for `i < a.len()`, via FFT.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(b.len() >= n);
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa: Vec<Complex64> =
        (0..size).map(|i| Complex64::new(if i < n { a[i] } else { 0.0 }, 0.0)).collect();
    let mut fb: Vec<Complex64> =
        (0..size).map(|i| Complex64::new(if i < n { b[i] } else { 0.0 }, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa[..n].iter().map(|v| v.re / size as f64).collect()
}

/// Trapezoidal `∫₀^{t_m} a(t_m − s) b(s) ds` on a uniform grid of step `h`, for every `m`.
pub fn trapezoid_convolution(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let full = convolve(a, b);
    full.iter()
        .enumerate()
        .map(|(m, s)| if m == 0 { 0.0 } else { h * (s - 0.5 * (a[m] * b[0] + a[0] * b[m])) })
        .collect()
}
