//! Real functions on the unit circle `T = R/Z`.
//!
//! A [`CircleMap`] is an immutable expression tree built from trigonometric
//! polynomials, piecewise-smooth maps with flat connectors, and composites
//! (sums, products, scalings, rotations, frequency rescalings and pointwise
//! unary functions). Every node is 1-periodic.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, KahanSum};

/// Absolute tolerance used by [`CircleMap::integrate`].
pub const QUAD_TOL: f64 = 1e-12;

/// Default small-divisor floor for [`solve_cohomological`].
pub const SMALL_DIVISOR_FLOOR: f64 = 1e-14;

/// Reduces `x` to `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CircleMap {
    Trig(TrigPoly),
    Piecewise(Piecewise),
    Composite(Composite),
}

/// `c0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)`, stored as
/// `[c0, a1, b1, ..., ad, bd]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piecewise {
    pub pieces: Vec<Piece>,
    #[serde(default = "one")]
    pub positive_gain: f64,
    #[serde(default = "one")]
    pub negative_gain: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub formula: Formula,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Formula {
    Constant { value: f64 },
    /// `amplitude * sin(2 pi cycles x)`
    Sine { amplitude: f64, cycles: f64 },
    /// Sine multiplied by `S(|x - flat_at| / width)`.
    TaperedSine {
        amplitude: f64,
        cycles: f64,
        flat_at: f64,
        width: f64,
    },
    /// `from + (to - from) * S((x - start) / (end - start))` over the piece.
    Step { from: f64, to: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Composite {
    Sum { terms: Vec<CircleMap> },
    Product { factors: Vec<CircleMap> },
    Scale { factor: f64, map: Box<CircleMap> },
    /// `x -> f(x + shift)`
    Shift { shift: f64, map: Box<CircleMap> },
    /// `x -> f(frequency * x)`
    Rescale { frequency: u64, map: Box<CircleMap> },
    Apply { func: UnaryFn, map: Box<CircleMap> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnaryFn {
    Exp,
    Ln,
    Logistic,
    Reciprocal,
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, flat to all orders at both ends.
#[inline]
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

impl TrigPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(Error::invalid(format!(
                "trig polynomial needs 2d+1 coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn degree(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn cos_sin(&self, k: usize) -> (f64, f64) {
        if k == 0 || k > self.degree() {
            return (0.0, 0.0);
        }
        (self.coeffs[2 * k - 1], self.coeffs[2 * k])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let d = self.degree();
        let mut acc = self.coeffs[0];
        if d == 0 {
            return acc;
        }
        let (s1, c1) = (TAU * frac(x)).sin_cos();
        let (mut s, mut c) = (s1, c1);
        for k in 1..=d {
            acc += self.coeffs[2 * k - 1] * c + self.coeffs[2 * k] * s;
            if k < d {
                if k % 8 == 7 {
                    let (sk, ck) = (TAU * frac(x * (k + 1) as f64)).sin_cos();
                    s = sk;
                    c = ck;
                } else {
                    let nc = c * c1 - s * s1;
                    s = s * c1 + c * s1;
                    c = nc;
                }
            }
        }
        acc
    }

    /// Coefficients of `x -> self(x + beta)`.
    pub fn shifted(&self, beta: f64) -> TrigPoly {
        let mut out = self.coeffs.clone();
        for k in 1..=self.degree() {
            let (a, b) = self.cos_sin(k);
            let (st, ct) = (TAU * frac(k as f64 * beta)).sin_cos();
            out[2 * k - 1] = a * ct + b * st;
            out[2 * k] = b * ct - a * st;
        }
        TrigPoly { coeffs: out }
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, v) in self.coeffs.iter().enumerate() {
            out[i] += v;
        }
        for (i, v) in other.coeffs.iter().enumerate() {
            out[i] += v;
        }
        TrigPoly { coeffs: out }
    }

    pub fn scaled(&self, factor: f64) -> TrigPoly {
        TrigPoly {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Sum of absolute coefficient values, an upper bound for the sup norm.
    pub fn l1_bound(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Complex Fourier coefficient of `e^{2 pi i k x}` for `k >= 1`.
    fn complex_mode(&self, k: usize) -> Complex64 {
        let (a, b) = self.cos_sin(k);
        Complex64::new(a / 2.0, -b / 2.0)
    }

    fn set_complex_mode(coeffs: &mut [f64], k: usize, z: Complex64) {
        coeffs[2 * k - 1] = 2.0 * z.re;
        coeffs[2 * k] = -2.0 * z.im;
    }
}

impl Piecewise {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        let pw = Self {
            pieces,
            positive_gain: 1.0,
            negative_gain: 1.0,
        };
        pw.validate()?;
        Ok(pw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.is_empty() {
            return Err(Error::invalid("piecewise map has no pieces"));
        }
        if self.pieces[0].start != 0.0 || self.pieces.last().unwrap().end != 1.0 {
            return Err(Error::invalid("pieces must cover [0, 1)"));
        }
        for w in self.pieces.windows(2) {
            if w[0].end != w[1].start {
                return Err(Error::invalid("pieces must be contiguous"));
            }
        }
        if self.pieces.iter().any(|p| p.end <= p.start) {
            return Err(Error::invalid("empty piece"));
        }
        Ok(())
    }

    fn raw(&self, piece: &Piece, x: f64) -> f64 {
        match piece.formula {
            Formula::Constant { value } => value,
            Formula::Sine { amplitude, cycles } => amplitude * (TAU * cycles * x).sin(),
            Formula::TaperedSine {
                amplitude,
                cycles,
                flat_at,
                width,
            } => amplitude * (TAU * cycles * x).sin() * smooth_step((x - flat_at).abs() / width),
            Formula::Step { from, to } => {
                from + (to - from) * smooth_step((x - piece.start) / (piece.end - piece.start))
            }
        }
    }

    fn gained(&self, v: f64) -> f64 {
        if v > 0.0 {
            v * self.positive_gain
        } else {
            v * self.negative_gain
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let y = frac(x);
        let idx = self.pieces.partition_point(|p| p.end <= y);
        let piece = &self.pieces[idx.min(self.pieces.len() - 1)];
        self.gained(self.raw(piece, y))
    }

    /// Largest jump between adjacent pieces, including the wrap at 1 ~ 0.
    pub fn max_jump(&self) -> f64 {
        let n = self.pieces.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let a = &self.pieces[i];
            let b = &self.pieces[(i + 1) % n];
            let left = self.gained(self.raw(a, a.end));
            let right = self.gained(self.raw(b, b.start));
            worst = worst.max((left - right).abs());
        }
        worst
    }

    pub fn with_gains(mut self, positive: f64, negative: f64) -> Self {
        self.positive_gain = positive;
        self.negative_gain = negative;
        self
    }
}

impl UnaryFn {
    fn apply(self, v: f64) -> f64 {
        match self {
            UnaryFn::Exp => v.exp(),
            UnaryFn::Ln => v.ln(),
            UnaryFn::Logistic => 1.0 / (1.0 + (-v).exp()),
            UnaryFn::Reciprocal => 1.0 / v,
        }
    }
}

impl CircleMap {
    pub fn constant(c: f64) -> Self {
        CircleMap::Trig(TrigPoly { coeffs: vec![c] })
    }

    pub fn trig(coeffs: Vec<f64>) -> Result<Self> {
        Ok(CircleMap::Trig(TrigPoly::new(coeffs)?))
    }

    /// `c + amplitude * cos(2 pi k x)`.
    pub fn cosine(c: f64, amplitude: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; 2 * k + 1];
        coeffs[0] = c;
        coeffs[2 * k - 1] = amplitude;
        CircleMap::Trig(TrigPoly { coeffs })
    }

    /// `c + amplitude * sin(2 pi k x)`.
    pub fn sine(c: f64, amplitude: f64, k: usize) -> Self {
        let mut coeffs = vec![0.0; 2 * k + 1];
        coeffs[0] = c;
        coeffs[2 * k] = amplitude;
        CircleMap::Trig(TrigPoly { coeffs })
    }

    pub fn sum(terms: Vec<CircleMap>) -> Self {
        if terms.iter().all(|t| matches!(t, CircleMap::Trig(_))) && !terms.is_empty() {
            let mut acc = TrigPoly::zero();
            for t in &terms {
                if let CircleMap::Trig(p) = t {
                    acc = acc.add(p);
                }
            }
            return CircleMap::Trig(acc);
        }
        CircleMap::Composite(Composite::Sum { terms })
    }

    pub fn product(factors: Vec<CircleMap>) -> Self {
        CircleMap::Composite(Composite::Product { factors })
    }

    pub fn scale(self, factor: f64) -> Self {
        match self {
            CircleMap::Trig(p) => CircleMap::Trig(p.scaled(factor)),
            other => CircleMap::Composite(Composite::Scale {
                factor,
                map: Box::new(other),
            }),
        }
    }

    pub fn shift(self, shift: f64) -> Self {
        match self {
            CircleMap::Trig(p) => CircleMap::Trig(p.shifted(shift)),
            other => CircleMap::Composite(Composite::Shift {
                shift,
                map: Box::new(other),
            }),
        }
    }

    pub fn rescale(self, frequency: u64) -> Self {
        CircleMap::Composite(Composite::Rescale {
            frequency,
            map: Box::new(self),
        })
    }

    pub fn apply(self, func: UnaryFn) -> Self {
        CircleMap::Composite(Composite::Apply {
            func,
            map: Box::new(self),
        })
    }

    /// `1 - f`.
    pub fn one_minus(self) -> Self {
        CircleMap::sum(vec![CircleMap::constant(1.0), self.scale(-1.0)])
    }

    /// For a probability map `p`, the map `x -> 1 - p(-x)` describing the
    /// mirror-image walk.
    pub fn reflected_probability(&self) -> Self {
        CircleMap::Composite(Composite::Scale {
            factor: -1.0,
            map: Box::new(CircleMap::Composite(Composite::Sum {
                terms: vec![CircleMap::constant(-1.0), self.mirrored()],
            })),
        })
    }

    /// `x -> f(-x)`.
    pub fn mirrored(&self) -> Self {
        match self {
            CircleMap::Trig(p) => {
                let mut c = p.coeffs.clone();
                for k in 1..=p.degree() {
                    c[2 * k] = -c[2 * k];
                }
                CircleMap::Trig(TrigPoly { coeffs: c })
            }
            CircleMap::Piecewise(pw) => {
                let mut pieces: Vec<Piece> = pw
                    .pieces
                    .iter()
                    .rev()
                    .map(|p| Piece {
                        start: 1.0 - p.end,
                        end: 1.0 - p.start,
                        formula: match p.formula {
                            Formula::Constant { value } => Formula::Constant { value },
                            Formula::Sine { amplitude, cycles } => Formula::Sine {
                                amplitude: -amplitude,
                                cycles,
                            },
                            Formula::TaperedSine {
                                amplitude,
                                cycles,
                                flat_at,
                                width,
                            } => Formula::TaperedSine {
                                amplitude: -amplitude,
                                cycles,
                                flat_at: 1.0 - flat_at,
                                width,
                            },
                            Formula::Step { from, to } => Formula::Step { from: to, to: from },
                        },
                    })
                    .collect();
                if let Some(first) = pieces.first_mut() {
                    first.start = 0.0;
                }
                if let Some(last) = pieces.last_mut() {
                    last.end = 1.0;
                }
                // sin(2 pi c (1 - x)) = -sin(2 pi c x) only for integer cycles;
                // the formulas above assume integer cycles.
                CircleMap::Piecewise(Piecewise {
                    pieces,
                    positive_gain: pw.positive_gain,
                    negative_gain: pw.negative_gain,
                })
            }
            CircleMap::Composite(c) => CircleMap::Composite(match c {
                Composite::Sum { terms } => Composite::Sum {
                    terms: terms.iter().map(|t| t.mirrored()).collect(),
                },
                Composite::Product { factors } => Composite::Product {
                    factors: factors.iter().map(|t| t.mirrored()).collect(),
                },
                Composite::Scale { factor, map } => Composite::Scale {
                    factor: *factor,
                    map: Box::new(map.mirrored()),
                },
                Composite::Shift { shift, map } => Composite::Shift {
                    shift: -shift,
                    map: Box::new(map.mirrored()),
                },
                Composite::Rescale { frequency, map } => Composite::Rescale {
                    frequency: *frequency,
                    map: Box::new(map.mirrored()),
                },
                Composite::Apply { func, map } => Composite::Apply {
                    func: *func,
                    map: Box::new(map.mirrored()),
                },
            }),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CircleMap::Trig(p) => p.eval(x),
            CircleMap::Piecewise(pw) => pw.eval(x),
            CircleMap::Composite(c) => match c {
                Composite::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
                Composite::Product { factors } => factors.iter().map(|t| t.eval(x)).product(),
                Composite::Scale { factor, map } => factor * map.eval(x),
                Composite::Shift { shift, map } => map.eval(frac(x + shift)),
                Composite::Rescale { frequency, map } => map.eval(frac(*frequency as f64 * frac(x))),
                Composite::Apply { func, map } => func.apply(map.eval(x)),
            },
        }
    }

    /// Points in `[0, 1)` where the map may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_breakpoints(&mut out);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        out
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            CircleMap::Trig(_) => {}
            CircleMap::Piecewise(pw) => out.extend(pw.pieces.iter().map(|p| p.start)),
            CircleMap::Composite(c) => match c {
                Composite::Sum { terms } => terms.iter().for_each(|t| t.collect_breakpoints(out)),
                Composite::Product { factors } => {
                    factors.iter().for_each(|t| t.collect_breakpoints(out))
                }
                Composite::Scale { map, .. } | Composite::Apply { map, .. } => {
                    map.collect_breakpoints(out)
                }
                Composite::Shift { shift, map } => {
                    let mut inner = Vec::new();
                    map.collect_breakpoints(&mut inner);
                    out.extend(inner.into_iter().map(|b| frac(b - shift)));
                }
                Composite::Rescale { frequency, map } => {
                    let mut inner = Vec::new();
                    map.collect_breakpoints(&mut inner);
                    let q = *frequency as f64;
                    if inner.len() as u64 * frequency > 1 << 22 {
                        return;
                    }
                    for k in 0..*frequency {
                        out.extend(inner.iter().map(|b| (k as f64 + b) / q));
                    }
                }
            },
        }
    }

    /// `∫_0^1 f(x) dx`. Linear nodes and rotations/rescalings are handled
    /// exactly; nonlinear nodes use adaptive Simpson at [`QUAD_TOL`].
    pub fn integrate(&self) -> Result<f64> {
        match self {
            CircleMap::Trig(p) => Ok(p.mean()),
            CircleMap::Composite(Composite::Sum { terms }) => {
                let mut acc = KahanSum::new();
                for t in terms {
                    acc.add(t.integrate()?);
                }
                Ok(acc.value())
            }
            CircleMap::Composite(Composite::Scale { factor, map }) => Ok(factor * map.integrate()?),
            CircleMap::Composite(Composite::Shift { map, .. })
            | CircleMap::Composite(Composite::Rescale { map, .. }) => map.integrate(),
            CircleMap::Piecewise(pw) => {
                let mut acc = KahanSum::new();
                for piece in &pw.pieces {
                    let f = |x: f64| pw.gained(pw.raw(piece, x));
                    let tol = QUAD_TOL * (piece.end - piece.start);
                    acc.add(numerics::adaptive_simpson(
                        &f,
                        piece.start,
                        piece.end,
                        tol,
                        numerics::QUAD_MAX_INTERVALS,
                    )?);
                }
                Ok(acc.value())
            }
            _ => self.integrate_with(|v| v, QUAD_TOL),
        }
    }

    /// `∫_0^1 g(f(x)) dx` by adaptive quadrature split at the breakpoints.
    pub fn integrate_with<G: Fn(f64) -> f64>(&self, g: G, tol: f64) -> Result<f64> {
        let breaks = self.breakpoints();
        numerics::integrate_unit(&|x| g(self.eval(x)), &breaks, tol)
    }

    /// Minimum and maximum over a uniform grid of `n` points plus breakpoints.
    pub fn grid_range(&self, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |x: f64| {
            let v = self.eval(x);
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for i in 0..n {
            visit(i as f64 / n as f64);
        }
        for b in self.breakpoints() {
            visit(b);
        }
        (lo, hi)
    }

    pub fn as_trig(&self) -> Option<&TrigPoly> {
        match self {
            CircleMap::Trig(p) => Some(p),
            _ => None,
        }
    }
}

/// Truncated Fourier series of `f` up to degree `d`, from an `n`-point
/// trapezoid rule (spectrally accurate for smooth periodic `f`).
pub fn fourier_truncate<F: Fn(f64) -> f64>(f: F, d: usize, n: usize) -> TrigPoly {
    let n = n.max(4 * d + 4);
    let vals: Vec<f64> = (0..n).map(|i| f(i as f64 / n as f64)).collect();
    let mut coeffs = vec![0.0; 2 * d + 1];
    let mut c0 = KahanSum::new();
    for v in &vals {
        c0.add(*v);
    }
    coeffs[0] = c0.value() / n as f64;
    for k in 1..=d {
        let mut a = KahanSum::new();
        let mut b = KahanSum::new();
        for (i, v) in vals.iter().enumerate() {
            let (s, c) = (TAU * frac((k * i) as f64 / n as f64)).sin_cos();
            a.add(v * c);
            b.add(v * s);
        }
        coeffs[2 * k - 1] = 2.0 * a.value() / n as f64;
        coeffs[2 * k] = 2.0 * b.value() / n as f64;
    }
    TrigPoly { coeffs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohomologyMode {
    Symmetric,
    Asymmetric,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cohomology {
    pub c: f64,
    pub psi: TrigPoly,
    /// Sup over a 1024-point grid of `|psi(x+alpha) - psi(x) - (h(x) - c)|`.
    pub residual: f64,
}

/// Solves `psi(x + alpha) - psi(x) = h(x) - c` mode by mode.
pub fn solve_cohomological(
    h: &TrigPoly,
    alpha: f64,
    mode: CohomologyMode,
    floor: f64,
) -> Result<Cohomology> {
    let c = match mode {
        CohomologyMode::Symmetric => {
            if h.mean().abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "symmetric mode needs a zero-mean right-hand side, mean = {:e}",
                    h.mean()
                )));
            }
            0.0
        }
        CohomologyMode::Asymmetric => h.mean(),
    };
    let d = h.degree();
    let mut coeffs = vec![0.0; 2 * d + 1];
    for k in 1..=d {
        let angle = TAU * frac(k as f64 * alpha);
        let divisor = Complex64::new(angle.cos() - 1.0, angle.sin());
        let hk = h.complex_mode(k);
        if hk == Complex64::new(0.0, 0.0) {
            continue;
        }
        if divisor.norm() < floor {
            return Err(Error::SmallDivisor {
                mode: k,
                value: divisor.norm(),
            });
        }
        TrigPoly::set_complex_mode(&mut coeffs, k, hk / divisor);
    }
    let psi = TrigPoly { coeffs };
    let shifted = psi.shifted(alpha);
    let mut residual: f64 = 0.0;
    for i in 0..1024 {
        let x = i as f64 / 1024.0;
        let r = shifted.eval(x) - psi.eval(x) - (h.eval(x) - c);
        residual = residual.max(r.abs());
    }
    Ok(Cohomology { c, psi, residual })
}

/// Output of [`birkhoff_rational_check`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BirkhoffCheck {
    pub sum_value: f64,
    pub integral: f64,
    pub defect: f64,
}

/// `sum_{j<q} e^{V(x + j/q)}` compared with `q ∫ e^V`.
pub fn birkhoff_rational_check(v: &TrigPoly, q: u64, x: f64) -> Result<BirkhoffCheck> {
    if q == 0 {
        return Err(Error::invalid("q must be positive"));
    }
    let mut acc = KahanSum::new();
    for j in 0..q {
        acc.add(v.eval(frac(x + j as f64 / q as f64)).exp());
    }
    let f = |t: f64| v.eval(t).exp();
    let integral =
        numerics::adaptive_simpson(&f, 0.0, 1.0, 1e-16, numerics::QUAD_MAX_INTERVALS)?;
    let sum_value = acc.value();
    Ok(BirkhoffCheck {
        sum_value,
        integral,
        defect: (sum_value - q as f64 * integral).abs(),
    })
}

/// Degree of the truncated exponential series `sum_{l<=L} V^l / l!` needed
/// for the remainder to fall below `tol`, i.e. `d * L`.
pub fn retained_expansion_degree(v: &TrigPoly, tol: f64) -> usize {
    let m = v.l1_bound();
    if m == 0.0 || v.degree() == 0 {
        return 0;
    }
    let mut l = 0usize;
    let mut term = m; // m^{l+1} / (l+1)!
    while term * m.exp() >= tol {
        l += 1;
        term *= m / (l + 1) as f64;
    }
    v.degree() * l
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_eval_matches_direct_formula() {
        let p = TrigPoly::new(vec![0.3, 0.5, -0.2, 0.1, 0.7, 0.0, 0.05]).unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.0731;
            let direct = 0.3
                + 0.5 * (TAU * x).cos()
                - 0.2 * (TAU * x).sin()
                + 0.1 * (2.0 * TAU * x).cos()
                + 0.7 * (2.0 * TAU * x).sin()
                + 0.05 * (3.0 * TAU * x).sin();
            assert!((p.eval(x) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn high_degree_eval_stays_accurate() {
        let mut coeffs = vec![0.0; 81];
        coeffs[79] = 1.0;
        let p = TrigPoly::new(coeffs).unwrap();
        let x = 0.123456;
        assert!((p.eval(x) - (40.0 * TAU * x).cos()).abs() < 1e-12);
    }

    #[test]
    fn shifted_poly_is_rotation() {
        let p = TrigPoly::new(vec![0.1, 0.4, -0.3, 0.2, 0.25]).unwrap();
        let s = p.shifted(0.377);
        for i in 0..20 {
            let x = i as f64 / 20.0;
            assert!((s.eval(x) - p.eval(x + 0.377)).abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_step_is_monotone_and_flat() {
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = smooth_step(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(smooth_step(0.0), 0.0);
        assert_eq!(smooth_step(1e-3), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
    }

    #[test]
    fn reflected_probability_mirrors() {
        let p = CircleMap::cosine(0.5, 0.1, 1).shift(0.1);
        let r = p.reflected_probability();
        for i in 0..10 {
            let x = i as f64 * 0.097;
            assert!((r.eval(x) - (1.0 - p.eval(-x))).abs() < 1e-14);
        }
    }

    #[test]
    fn retained_degree_for_cosine() {
        let v = TrigPoly::new(vec![0.0, 1.0, 0.0]).unwrap();
        let d = retained_expansion_degree(&v, 1e-14);
        assert!((14..=18).contains(&d), "{d}");
    }
}
