//! Small numerical kernels shared by the modules: compensated sums,
//! log-space accumulation, adaptive quadrature, tridiagonal solves and the
//! normal distribution function.

use crate::error::{Error, Result};

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum_i e^{x_i}`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add((x - m).exp());
    }
    m + acc.value().ln()
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Default subdivision cap for [`adaptive_simpson`].
pub const QUAD_MAX_INTERVALS: usize = 1 << 20;

/// Adaptive Simpson quadrature with Richardson correction over `[a, b]`.
///
/// `tol` is an absolute tolerance for the whole interval; it is split
/// proportionally to length among the subintervals.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    struct Seg {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        depth: u32,
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let width = b - a;
    let mut stack = vec![Seg {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        depth: 0,
    }];
    let mut total = KahanSum::new();
    let mut intervals = 1usize;
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let lm = 0.5 * (s.a + m);
        let rm = 0.5 * (m + s.b);
        let flm = f(lm);
        let frm = f(rm);
        let h = s.b - s.a;
        let left = h / 12.0 * (s.fa + 4.0 * flm + s.fm);
        let right = h / 12.0 * (s.fm + 4.0 * frm + s.fb);
        let refined = left + right;
        let err = refined - s.whole;
        if !refined.is_finite() {
            return Err(Error::invalid(format!(
                "integrand not finite near x = {m}"
            )));
        }
        let local_tol = tol * h / width;
        if err.abs() <= 15.0 * local_tol || s.depth >= 60 || h < 1e-15 * width {
            total.add(refined + err / 15.0);
            continue;
        }
        intervals += 1;
        if intervals > max_intervals {
            return Err(Error::Quadrature(max_intervals));
        }
        stack.push(Seg {
            a: s.a,
            b: m,
            fa: s.fa,
            fm: flm,
            fb: s.fm,
            whole: left,
            depth: s.depth + 1,
        });
        stack.push(Seg {
            a: m,
            b: s.b,
            fa: s.fm,
            fm: frm,
            fb: s.fb,
            whole: right,
            depth: s.depth + 1,
        });
    }
    Ok(total.value())
}

/// Integrates `f` over `[0, 1]`, splitting at the given breakpoints.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < 1.0)
        .collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut total = KahanSum::new();
    let mut budget = QUAD_MAX_INTERVALS;
    for w in pts.windows(2) {
        let seg_tol = tol * (w[1] - w[0]);
        let v = adaptive_simpson(f, w[0], w[1], seg_tol.max(1e-300), budget)?;
        total.add(v);
        budget = budget.saturating_sub(1).max(1024);
    }
    Ok(total.value())
}

/// LU factors of a tridiagonal M-matrix `A` with `A[i][i-1] = -lower[i]`,
/// `A[i][i+1] = -upper[i]` and `A[i][i] = lower[i] + upper[i] + slack[i]`.
///
/// Elimination tracks the row deficits instead of the pivots, so no step
/// subtracts and every entry keeps full relative accuracy (the
/// Grassmann-Taksar-Heyman trick).
#[derive(Clone, Debug)]
pub struct MMatrixLu {
    lower: Vec<f64>,
    upper: Vec<f64>,
    pivot: Vec<f64>,
}

impl MMatrixLu {
    /// `lower[0]` and `upper[n-1]` must be zero; put boundary leakage in `slack`.
    pub fn factor(lower: &[f64], upper: &[f64], slack: &[f64]) -> Result<Self> {
        let n = slack.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::invalid("tridiagonal bands must have equal length"));
        }
        if n > 0 && (lower[0] != 0.0 || upper[n - 1] != 0.0) {
            return Err(Error::invalid("corner entries must be zero"));
        }
        if lower.iter().chain(upper).chain(slack).any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("M-matrix bands must be nonnegative"));
        }
        let mut pivot = vec![0.0; n];
        let mut deficit = 0.0;
        for i in 0..n {
            deficit = if i == 0 {
                slack[0]
            } else {
                slack[i] + lower[i] * deficit / pivot[i - 1]
            };
            pivot[i] = upper[i] + deficit;
            if !(pivot[i] > 0.0) || !pivot[i].is_finite() {
                return Err(Error::invalid("singular tridiagonal system"));
            }
        }
        Ok(MMatrixLu {
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot.is_empty()
    }

    /// Solves `A x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut z = rhs.to_vec();
        for i in 1..n {
            z[i] += self.lower[i] / self.pivot[i - 1] * z[i - 1];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let next = if i + 1 < n { self.upper[i] * x[i + 1] } else { 0.0 };
            x[i] = (z[i] + next) / self.pivot[i];
        }
        x
    }

    /// Solves `A^T x = rhs`.
    pub fn solve_transposed(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let prev = if i > 0 { self.upper[i - 1] * y[i - 1] } else { 0.0 };
            y[i] = (rhs[i] + prev) / self.pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] += self.lower[i + 1] / self.pivot[i] * y[i + 1];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13, QUAD_MAX_INTERVALS).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1, -2.0, 3.5, 1.0];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 2.0), 2.0);
    }

    #[test]
    fn m_matrix_solves_small_system() {
        // [2 -1 0; -1 3 -1; 0 -1 2] x = [1, 1, 1] -> x = [1, 1, 1]
        let lu = MMatrixLu::factor(&[0.0, 1.0, 1.0], &[1.0, 1.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        for v in lu.solve(&[1.0, 1.0, 1.0]) {
            assert!((v - 1.0).abs() < 1e-15);
        }
        // [2 -1; -0.5 1] with transpose [2 -0.5; -1 1] y = [1.5, 0] -> y = [1, 1]
        let lu = MMatrixLu::factor(&[0.0, 0.5], &[1.0, 0.0], &[1.0, 0.5]).unwrap();
        let y = lu.solve_transposed(&[1.5, 0.0]);
        assert!((y[0] - 1.0).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }
}
