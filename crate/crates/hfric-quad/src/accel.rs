use num_complex::Complex64;

/// Wynn ε-algorithm over a sliding window of partial sums.
#[derive(Debug, Clone)]
pub struct EpsilonTable {
    sums: Vec<Complex64>,
    window: usize,
}

impl EpsilonTable {
    pub fn new(window: usize) -> Self {
        Self { sums: Vec::new(), window: window.max(3) }
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn push(&mut self, s: Complex64) {
        self.sums.push(s);
        if self.sums.len() > self.window {
            self.sums.remove(0);
        }
    }

    /// Best extrapolated limit and a crude error estimate, taken from the last
    /// entries of the two highest even columns.
    pub fn estimate(&self) -> Option<(Complex64, f64)> {
        let n = self.sums.len();
        if n < 3 {
            return self.sums.last().map(|&s| (s, f64::INFINITY));
        }
        let mut prev: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n + 1];
        let mut cur: Vec<Complex64> = self.sums.clone();
        let mut best = *cur.last().unwrap();
        let mut best_prev = cur[cur.len() - 2];
        let mut k = 0usize;
        while cur.len() >= 2 {
            let mut next = Vec::with_capacity(cur.len() - 1);
            for i in 0..cur.len() - 1 {
                let d = cur[i + 1] - cur[i];
                if d.norm() == 0.0 || !d.norm().is_finite() {
                    // column has converged exactly; the even column above is the answer
                    return Some(if k % 2 == 0 { (cur[i + 1], 0.0) } else { (best, (best - best_prev).norm()) });
                }
                next.push(prev[i + 1] + d.inv());
            }
            k += 1;
            prev = cur;
            cur = next;
            if k % 2 == 0 && !cur.is_empty() {
                let candidate = *cur.last().unwrap();
                if !(candidate.re.is_finite() && candidate.im.is_finite()) {
                    break;
                }
                best_prev = best;
                best = candidate;
            }
        }
        Some((best, (best - best_prev).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accelerates_alternating_harmonic_series() {
        let mut t = EpsilonTable::new(40);
        let mut s = 0.0;
        for n in 1..=20 {
            s += if n % 2 == 1 { 1.0 } else { -1.0 } / n as f64;
            t.push(Complex64::new(s, 0.0));
        }
        let (v, _) = t.estimate().unwrap();
        assert!((v.re - std::f64::consts::LN_2).abs() < 1e-10, "{}", v.re);
    }
}
