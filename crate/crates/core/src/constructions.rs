//! Explicit builders: the `ẽ_{n,δ}` family and δ-balancing, coboundary
//! approximants, perturbed maps with their `U` sets, the asymmetric bump
//! `g_n`, and the generic deterministic environments.

use serde::{Deserialize, Serialize};

use crate::circlemap::{
    fourier_truncate, frac, solve_cohomological, CircleMap, CohomologyMode, Formula, Piece,
    Piecewise, TrigPoly, UnaryFn, QUAD_TOL, SMALL_DIVISOR_FLOOR,
};
use crate::environment::{symmetry_defect, EnvSpec, Environment, ProceduralRule};
use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::numerics::{adaptive_simpson, KahanSum, QUAD_MAX_INTERVALS};
use crate::potential::{log_lambda, log_tail_left, log_tail_right};

/// Target for `|I_{n,δ}|` in [`balance_delta`].
pub const BALANCE_TOL: f64 = 1e-11;

fn tapered(flat_at: f64, width: f64) -> Formula {
    Formula::TaperedSine {
        amplitude: 1.0,
        cycles: 4.0,
        flat_at,
        width,
    }
}

/// `ẽ_{n,δ}` on `[0, 1)`: zero on `[0, 1/4] ∪ [3/4, 1)`, `sin 8πx` on the
/// four bands, flat connectors of width `1/n²` at `1/4, 3/8, 5/8, 3/4`.
pub fn tilde_e(n: u32, delta: f64) -> Result<CircleMap> {
    if n < 4 {
        return Err(Error::invalid("tilde_e needs n >= 4 so the 1/n^2 connectors fit"));
    }
    if delta.abs() > 1.0 {
        return Err(Error::invalid("|delta| must be <= 1"));
    }
    let w = 1.0 / (n as f64 * n as f64);
    let sine = Formula::Sine {
        amplitude: 1.0,
        cycles: 4.0,
    };
    let raw = [
        (0.0, 0.25, Formula::Constant { value: 0.0 }),
        (0.25, 0.25 + w, tapered(0.25, w)),
        (0.25 + w, 0.375 - w, sine.clone()),
        (0.375 - w, 0.375 + w, tapered(0.375, w)),
        (0.375 + w, 0.625 - w, sine.clone()),
        (0.625 - w, 0.625 + w, tapered(0.625, w)),
        (0.625 + w, 0.75 - w, sine),
        (0.75 - w, 0.75, tapered(0.75, w)),
        (0.75, 1.0, Formula::Constant { value: 0.0 }),
    ];
    let pieces = raw
        .into_iter()
        .filter(|(s, e, _)| e > s)
        .map(|(start, end, formula)| Piece {
            start,
            end,
            formula,
        })
        .collect();
    let pw = Piecewise::new(pieces)?.with_gains(1.0 + delta.max(0.0), 1.0 + (-delta).max(0.0));
    Ok(CircleMap::Piecewise(pw))
}

/// Applies the δ gains to an arbitrary piecewise bump.
pub fn with_delta(bump: &CircleMap, delta: f64) -> Result<CircleMap> {
    match bump {
        CircleMap::Piecewise(p) => Ok(CircleMap::Piecewise(
            p.clone()
                .with_gains(1.0 + delta.max(0.0), 1.0 + (-delta).max(0.0)),
        )),
        _ => Err(Error::invalid("δ gains need a piecewise bump")),
    }
}

/// `q^{-s} f(q x)`.
pub fn rescaled_bump(f: CircleMap, q: u64, s: f64) -> CircleMap {
    f.rescale(q).scale((q as f64).powf(-s))
}

/// `min_x min(p(x), 1 - p(x))` over a 4096-point grid and the breakpoints.
pub fn margin(p: &CircleMap) -> f64 {
    let mut m = f64::INFINITY;
    let mut see = |x: f64| {
        let v = p.eval(x);
        m = m.min(v.min(1.0 - v));
    };
    for i in 0..4096 {
        see(i as f64 / 4096.0);
    }
    for b in p.breakpoints() {
        see(b);
    }
    m
}

fn sup_abs(f: &CircleMap) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..4096 {
        m = m.max(f.eval(i as f64 / 4096.0).abs());
    }
    for b in f.breakpoints() {
        m = m.max(f.eval(b).abs());
    }
    m
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Balance {
    pub delta: f64,
    pub defect: f64,
    pub iterations: usize,
    /// `(δ, I_{n,δ})` at every evaluation, sorted by δ.
    pub trace: Vec<(f64, f64)>,
}

/// Bisection for δ in `[-1/n, 1/n]` with `∫ ln p_n - ln q_n = 0`, where
/// `p_n = p̄ + q^{-s} bump_δ(q x)`.
pub fn balance_delta_with(
    p_bar: &CircleMap,
    bump: &CircleMap,
    n: u32,
    q: u64,
    s: f64,
) -> Result<Balance> {
    if n == 0 || q == 0 {
        return Err(Error::invalid("n and q must be positive"));
    }
    let bound = 1.0 / n as f64;
    let amp = (q as f64).powf(-s) * (1.0 + bound) * sup_abs(bump);
    let m = margin(p_bar);
    if amp >= m {
        return Err(Error::invalid(format!(
            "perturbation amplitude {amp:.3e} is not below the ellipticity margin {m:.3e} of p̄; raise s or q"
        )));
    }
    let defect = |d: f64| -> Result<f64> {
        let e = rescaled_bump(with_delta(bump, d)?, q, s);
        symmetry_defect(&CircleMap::sum(vec![p_bar.clone(), e]))
    };
    let mut trace = Vec::new();
    let (mut lo, mut hi) = (-bound, bound);
    let f_lo = defect(lo)?;
    let f_hi = defect(hi)?;
    trace.push((lo, f_lo));
    trace.push((hi, f_hi));
    if f_lo.abs() < BALANCE_TOL {
        return Ok(finish(lo, f_lo, 0, trace));
    }
    if f_hi.abs() < BALANCE_TOL {
        return Ok(finish(hi, f_hi, 0, trace));
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::Bracket { lo: f_lo, hi: f_hi });
    }
    let mut it = 0;
    loop {
        it += 1;
        let mid = 0.5 * (lo + hi);
        let f = defect(mid)?;
        trace.push((mid, f));
        if f.abs() < BALANCE_TOL {
            return finish_checked(mid, f, it, trace);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if it > 200 || hi - lo < f64::EPSILON {
            return Err(Error::Precision {
                bound: f.abs(),
                tolerance: BALANCE_TOL,
            });
        }
    }
}

fn finish(delta: f64, defect: f64, iterations: usize, mut trace: Vec<(f64, f64)>) -> Balance {
    trace.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Balance {
        delta,
        defect,
        iterations,
        trace,
    }
}

fn finish_checked(delta: f64, defect: f64, it: usize, trace: Vec<(f64, f64)>) -> Result<Balance> {
    let b = finish(delta, defect, it, trace);
    for w in b.trace.windows(2) {
        if w[1].1 < w[0].1 - 10.0 * QUAD_TOL {
            return Err(Error::invalid(format!(
                "I(δ) is not increasing: I({}) = {:e} > I({}) = {:e}",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    Ok(b)
}

pub fn balance_delta(p_bar: &CircleMap, n: u32, q: u64, s: f64) -> Result<Balance> {
    balance_delta_with(p_bar, &tilde_e(n, 0.0)?, n, q, s)
}

/// A union of intervals in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct USet {
    pub j: u32,
    pub intervals: Vec<(f64, f64)>,
    pub measure: f64,
}

impl USet {
    pub fn contains(&self, x: f64) -> bool {
        let y = frac(x);
        self.intervals.iter().any(|&(a, b)| a < y && y < b)
    }
}

/// Offsets of the base intervals `I_j` and `I'_j` (centres, before `/q`).
fn u_centres(j: u32) -> Vec<f64> {
    match j {
        1 => vec![3.0 / 8.0, -3.0 / 8.0],
        2 => vec![5.0 / 16.0, -7.0 / 16.0],
        3 => vec![0.0],
        _ => Vec::new(),
    }
}

/// `U_{j,n}` for `j = 1, 2, 3` with `I = (-1/200, 1/200)`.
pub fn u_set(j: u32, q: u64) -> Result<USet> {
    let centres = u_centres(j);
    if centres.is_empty() {
        return Err(Error::invalid("j must be 1, 2 or 3"));
    }
    let qf = q as f64;
    let half = 1.0 / 200.0;
    let mut intervals = Vec::new();
    for k in 0..q {
        for &c in &centres {
            let a = (c - half) / qf + k as f64 / qf;
            let b = (c + half) / qf + k as f64 / qf;
            let (fa, fb) = (frac(a), frac(a) + (b - a));
            if fb <= 1.0 {
                intervals.push((fa, fb));
            } else {
                intervals.push((fa, 1.0));
                intervals.push((0.0, fb - 1.0));
            }
        }
    }
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut m = KahanSum::new();
    for &(a, b) in &intervals {
        m.add(b - a);
    }
    Ok(USet {
        j,
        intervals,
        measure: m.value(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub p_bar: CircleMap,
    pub n: u32,
    pub q: u64,
    pub s: f64,
    pub delta: f64,
    pub amplitude: f64,
    pub e_n: CircleMap,
    pub p_n: CircleMap,
    pub symmetry_defect: f64,
    pub ellipticity: f64,
    pub u_sets: Vec<USet>,
}

/// `p_n = p̄ + q^{-s} ẽ_{n,δ_n}(q x)` with δ_n balanced.
pub fn perturbed_p(p_bar: &CircleMap, n: u32, q: u64, s: f64) -> Result<PerturbationPlan> {
    let bal = balance_delta(p_bar, n, q, s)?;
    let e_n = rescaled_bump(tilde_e(n, bal.delta)?, q, s);
    let p_n = CircleMap::sum(vec![p_bar.clone(), e_n.clone()]);
    let ellipticity = margin(&p_n);
    if !(ellipticity > 0.0) {
        return Err(Error::Ellipticity {
            site: "circle".into(),
            value: ellipticity,
        });
    }
    Ok(PerturbationPlan {
        p_bar: p_bar.clone(),
        n,
        q,
        s,
        delta: bal.delta,
        amplitude: (q as f64).powf(-s),
        e_n,
        p_n,
        symmetry_defect: bal.defect,
        ellipticity,
        u_sets: vec![u_set(1, q)?, u_set(2, q)?, u_set(3, q)?],
    })
}

/// `K = 1/p̄ + 1/q̄`.
pub fn k_map(p_bar: &CircleMap) -> CircleMap {
    CircleMap::sum(vec![
        p_bar.clone().apply(UnaryFn::Reciprocal),
        p_bar.clone().one_minus().apply(UnaryFn::Reciprocal),
    ])
}

/// Terms of the main technical estimate at one phase.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MainLemmaCheck {
    pub x: f64,
    pub m: i64,
    pub sigma: f64,
    pub sigma_bar: f64,
    /// `sum_{k=1}^{M} e_n K` along the orbit.
    pub sum_e_k: f64,
    /// `|Σ_x(M) - Σ̄_x(M) + sum e_n K|`.
    pub r_term: f64,
    /// `4 κ^{-2} M q^{-2s}`.
    pub r_bound: f64,
    /// `K̂ q^{-s} N_n ∫ ẽ` over the swept interval.
    pub integral_term: f64,
    /// `|sum e_n K - integral term|`.
    pub o_term: f64,
}

/// Orbit sums for `plan` at `x` over `m = 1..=M`, with `N_n = [(qη)^{-1}] q`.
pub fn main_lemma_check(
    plan: &PerturbationPlan,
    alpha: &Frequency,
    q_index: usize,
    x: f64,
    m: i64,
) -> Result<MainLemmaCheck> {
    let (_, q, _) = alpha.convergent(q_index)?;
    let qn = q.to_string().parse::<u64>().map_err(|_| Error::invalid("q too large"))?;
    if qn != plan.q {
        return Err(Error::invalid(format!(
            "convergent {q_index} has q = {qn}, plan uses q = {}",
            plan.q
        )));
    }
    let eta_signed = alpha.eta_f64(q_index)?;
    let nn = (1.0 / (qn as f64 * eta_signed.abs())).floor() * qn as f64;
    let a = alpha.alpha_f64();
    let k = k_map(&plan.p_bar);
    let mut sig = KahanSum::new();
    let mut sig_bar = KahanSum::new();
    let mut ek = KahanSum::new();
    for j in 1..=m {
        let y = frac(x + j as f64 * a);
        sig.add(log_lambda(plan.p_n.eval(y)));
        sig_bar.add(log_lambda(plan.p_bar.eval(y)));
        ek.add(plan.e_n.eval(y) * k.eval(y));
    }
    let kappa = margin(&plan.p_bar);
    let k_hat = k.integrate()?;
    let tilde = tilde_e(plan.n, plan.delta)?;
    let qx = qn as f64 * x;
    let span = m as f64 / nn;
    let (lo, hi) = if eta_signed >= 0.0 {
        (qx, qx + span)
    } else {
        (qx - span, qx)
    };
    let f = |t: f64| tilde.eval(t);
    let integral = adaptive_simpson(&f, lo, hi, 1e-13, QUAD_MAX_INTERVALS)?;
    let integral_term = k_hat * plan.amplitude * nn * integral;
    let r = sig.value() - sig_bar.value() + ek.value();
    Ok(MainLemmaCheck {
        x,
        m,
        sigma: sig.value(),
        sigma_bar: sig_bar.value(),
        sum_e_k: ek.value(),
        r_term: r.abs(),
        r_bound: 4.0 * kappa.powi(-2) * m as f64 * plan.amplitude.powi(2),
        integral_term,
        o_term: (ek.value() - integral_term).abs(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Coboundary {
    pub p_bar: CircleMap,
    /// Mean of `ln(q/p)` removed in symmetric mode.
    pub dropped_mean: f64,
    /// Constant part of `ln(q̄/p̄)`; zero in symmetric mode.
    pub c: f64,
    /// `ln(q̄/p̄) = c + ψ(x+α) - ψ(x)`, i.e. `g = e^{-ψ}`.
    pub psi: TrigPoly,
    /// `sup |ln g|` on a 4096-point grid.
    pub log_g_sup: f64,
    /// Sup-grid residual of `q̄/p̄ = e^c g(x)/g(x+α)`.
    pub residual: f64,
    pub degree: usize,
}

/// Fourier-truncated coboundary approximant of `p` above `α`.
pub fn coboundary_from(
    p: &CircleMap,
    alpha: &Frequency,
    degree: usize,
    mode: CohomologyMode,
) -> Result<Coboundary> {
    let m = margin(p);
    if !(m > 0.0) {
        return Err(Error::Ellipticity {
            site: "circle".into(),
            value: m,
        });
    }
    let mut h = fourier_truncate(|x| log_lambda(p.eval(x)), degree, 4096);
    let dropped_mean = match mode {
        CohomologyMode::Symmetric => std::mem::replace(&mut h.coeffs[0], 0.0),
        CohomologyMode::Asymmetric => 0.0,
    };
    let a = alpha.alpha_f64();
    let co = solve_cohomological(&h, a, mode, SMALL_DIVISOR_FLOOR)?;
    // p̄ = 1 / (1 + e^{h}) = logistic(-h)
    let p_bar = CircleMap::Trig(h.scaled(-1.0)).apply(UnaryFn::Logistic);
    let shifted = co.psi.shifted(a);
    let mut residual: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for i in 0..4096 {
        let x = i as f64 / 4096.0;
        let pb = p_bar.eval(x);
        let lhs = (1.0 - pb) / pb;
        let rhs = (co.c + shifted.eval(x) - co.psi.eval(x)).exp();
        residual = residual.max((lhs - rhs).abs());
        sup = sup.max(co.psi.eval(x).abs());
    }
    Ok(Coboundary {
        p_bar,
        dropped_mean,
        c: co.c,
        psi: co.psi,
        log_g_sup: sup,
        residual,
        degree,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GPerturbation {
    pub map: CircleMap,
    pub q: u64,
    pub amplitude: f64,
    /// `{q x} ∈ [0, 0.84]`.
    pub j_set: (f64, f64),
    /// `{q x} ∈ [0.86, 0.98]`.
    pub j_prime_set: (f64, f64),
    pub measure_j: f64,
    pub measure_j_prime: f64,
}

impl GPerturbation {
    pub fn in_j(&self, x: f64) -> bool {
        let y = frac(self.q as f64 * x);
        y >= self.j_set.0 && y <= self.j_set.1
    }

    pub fn in_j_prime(&self, x: f64) -> bool {
        let y = frac(self.q as f64 * x);
        y >= self.j_prime_set.0 && y <= self.j_prime_set.1
    }
}

/// `g_n`: 0 for `{qθ} ∈ [0, 0.85]`, `q^{-s}` for `{qθ} ∈ [0.86, 0.99]`, smooth steps between.
pub fn g_perturbation(n: u32, q: u64, s: f64) -> Result<GPerturbation> {
    if n < 2 || q == 0 {
        return Err(Error::invalid("g_perturbation needs n >= 2 and q >= 1"));
    }
    let a = (q as f64).powf(-s);
    let pieces = vec![
        Piece {
            start: 0.0,
            end: 0.85,
            formula: Formula::Constant { value: 0.0 },
        },
        Piece {
            start: 0.85,
            end: 0.86,
            formula: Formula::Step { from: 0.0, to: a },
        },
        Piece {
            start: 0.86,
            end: 0.99,
            formula: Formula::Constant { value: a },
        },
        Piece {
            start: 0.99,
            end: 1.0,
            formula: Formula::Step { from: a, to: 0.0 },
        },
    ];
    let map = CircleMap::Piecewise(Piecewise::new(pieces)?).rescale(q);
    Ok(GPerturbation {
        map,
        q,
        amplitude: a,
        j_set: (0.0, 0.84),
        j_prime_set: (0.86, 0.98),
        measure_j: 0.84,
        measure_j_prime: 0.12,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenericKind {
    Localization,
    Clt,
    TwoSided,
}

impl std::str::FromStr for GenericKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "localization" => Ok(Self::Localization),
            "clt" => Ok(Self::Clt),
            "two-sided" => Ok(Self::TwoSided),
            _ => Err(Error::invalid(format!("unknown generic kind '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericParams {
    pub k: i64,
    #[serde(default)]
    pub k1: i64,
    #[serde(default)]
    pub k2: i64,
    /// Values on `[-K, K]` for the two-sided kind; defaults to 0.6.
    #[serde(default)]
    pub base: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenericEnv {
    pub spec: EnvSpec,
    /// `|M_-| / |M_+|` for the two-sided kind.
    pub ratio: Option<f64>,
    pub escape_right_prob: Option<f64>,
    /// Common right-layer probability chosen by the balancing step.
    pub layer_p: Option<f64>,
}

fn layered(first: i64, core: Vec<f64>, left: f64, right: f64) -> EnvSpec {
    EnvSpec::Procedural(ProceduralRule::Layered {
        first,
        core,
        left,
        right,
    })
}

fn two_sided_spec(k: i64, k1: i64, k2: i64, base: &[f64], layer: f64) -> EnvSpec {
    let mut core = Vec::with_capacity((2 * k2 + 1) as usize);
    for j in -k2..=k2 {
        let v = if j.abs() <= k {
            base[(j + k) as usize]
        } else if j > k && j <= k1 {
            layer
        } else {
            0.5
        };
        core.push(v);
    }
    layered(-k2, core, 1.0 / 3.0, 2.0 / 3.0)
}

fn log_ratio(spec: &EnvSpec) -> Result<f64> {
    let env = Environment::build(spec)?;
    Ok(log_tail_left(&env, -1)? - log_tail_right(&env, 0)?)
}

pub fn generic_env(kind: GenericKind, params: &GenericParams) -> Result<GenericEnv> {
    let k = params.k;
    if k < 0 {
        return Err(Error::invalid("K must be >= 0"));
    }
    match kind {
        GenericKind::Localization => Ok(GenericEnv {
            spec: layered(-k + 1, vec![0.5; (2 * k) as usize], 2.0 / 3.0, 1.0 / 3.0),
            ratio: None,
            escape_right_prob: None,
            layer_p: None,
        }),
        GenericKind::Clt => {
            let core = if k == 0 {
                Vec::new()
            } else {
                vec![0.5; (2 * k - 1) as usize]
            };
            Ok(GenericEnv {
                spec: layered(-k + 1, core, 2.0 / 3.0, 2.0 / 3.0),
                ratio: None,
                escape_right_prob: None,
                layer_p: None,
            })
        }
        GenericKind::TwoSided => {
            let (k1, k2) = (params.k1, params.k2);
            if !(k < k1 && k1 < k2) {
                return Err(Error::invalid("two-sided needs K < K1 < K2"));
            }
            let base = params
                .base
                .clone()
                .unwrap_or_else(|| vec![0.6; (2 * k + 1) as usize]);
            if base.len() != (2 * k + 1) as usize {
                return Err(Error::invalid("base must have 2K + 1 values"));
            }
            // ln(|M_-|/|M_+|) increases with the layer probability.
            let (mut lo, mut hi) = (0.05, 0.95);
            let f_lo = log_ratio(&two_sided_spec(k, k1, k2, &base, lo))?;
            let f_hi = log_ratio(&two_sided_spec(k, k1, k2, &base, hi))?;
            let layer = if f_lo >= 0.0 {
                lo
            } else if f_hi <= 0.0 {
                hi
            } else {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let f = log_ratio(&two_sided_spec(k, k1, k2, &base, mid))?;
                    if f.abs() < 1e-13 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if f < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            let spec = two_sided_spec(k, k1, k2, &base, layer);
            let lr = log_ratio(&spec)?;
            let ratio = lr.exp();
            Ok(GenericEnv {
                spec,
                ratio: Some(ratio),
                escape_right_prob: Some(ratio / (1.0 + ratio)),
                layer_p: Some(layer),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilde_e_values() {
        let e = tilde_e(10, 0.0).unwrap();
        assert!((e.eval(5.0 / 16.0) - 1.0).abs() < 1e-15);
        assert_eq!(e.eval(0.1), 0.0);
        assert_eq!(e.eval(0.375), 0.0);
        let e = tilde_e(10, 0.5).unwrap();
        assert!((e.eval(5.0 / 16.0) - 1.5).abs() < 1e-15);
        assert!(tilde_e(3, 0.0).is_err());
    }

    #[test]
    fn tilde_e_has_zero_mean() {
        for n in [4, 5, 10, 30] {
            assert!(tilde_e(n, 0.0).unwrap().integrate().unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn u_set_measures() {
        assert!((u_set(1, 21).unwrap().measure - 0.02).abs() < 1e-12);
        assert!((u_set(2, 21).unwrap().measure - 0.02).abs() < 1e-12);
        assert!((u_set(3, 21).unwrap().measure - 0.01).abs() < 1e-12);
    }

    #[test]
    fn g_sets_and_values() {
        let g = g_perturbation(3, 13, 1.0).unwrap();
        assert_eq!(g.map.eval(0.5 / 13.0), 0.0);
        assert!((g.map.eval(0.9 / 13.0) - 1.0 / 13.0).abs() < 1e-15);
        assert!(g.measure_j > 0.8 && g.measure_j_prime > 0.1);
    }

    #[test]
    fn generic_localization_and_clt() {
        let loc = generic_env(GenericKind::Localization, &GenericParams { k: 0, k1: 0, k2: 0, base: None }).unwrap();
        let e = Environment::build(&loc.spec).unwrap();
        assert_eq!(e.p(0).unwrap(), 2.0 / 3.0);
        assert_eq!(e.p(1).unwrap(), 1.0 / 3.0);
        let clt = generic_env(GenericKind::Clt, &GenericParams { k: 0, k1: 0, k2: 0, base: None }).unwrap();
        let e = Environment::build(&clt.spec).unwrap();
        for j in -3..=3 {
            assert_eq!(e.p(j).unwrap(), 2.0 / 3.0);
        }
    }

    #[test]
    fn two_sided_balances() {
        let g = generic_env(
            GenericKind::TwoSided,
            &GenericParams {
                k: 4,
                k1: 16,
                k2: 64,
                base: None,
            },
        )
        .unwrap();
        let r = g.ratio.unwrap();
        assert!((0.99..=1.01).contains(&r), "{r}");
        let e = g.escape_right_prob.unwrap();
        assert!((0.49..=0.51).contains(&e));
    }
}
