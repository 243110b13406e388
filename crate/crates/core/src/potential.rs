//! The potential `Σ`, the martingale `M`, hitting probabilities, traps and
//! the criteria checkers C1, C2 and C3.
//!
//! Conventions: `Σ(0) = 0` and `Σ(n) - Σ(n-1) = ln q(n) - ln p(n)` for every
//! integer `n`; `M(0) = 0` and `M(n) - M(m) = sum_{j=m}^{n-1} e^{Σ(j)}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::environment::{Environment, MAX_TABLE_SITES};
use crate::error::{Error, Result};
use crate::numerics::{log_add_exp, log_sum_exp, KahanSum};

/// `ln(q/p)` computed without cancellation for `p` near 1.
#[inline]
pub fn log_lambda(p: f64) -> f64 {
    (-p).ln_1p() - p.ln()
}

/// `Σ(j)` for `j` in `[lo, hi]`.
pub fn sigma_range(env: &Environment, lo: i64, hi: i64) -> Result<Vec<f64>> {
    if hi < lo {
        return Ok(Vec::new());
    }
    let a = lo.min(0);
    let b = hi.max(0);
    let span = (b - a + 1) as u64;
    if span > MAX_TABLE_SITES {
        return Err(Error::Memory(span));
    }
    let p = env.table(a, b)?;
    let ll = |j: i64| log_lambda(p[(j - a) as usize]);
    let mut sig = vec![0.0; span as usize];
    let zero = (-a) as usize;
    let mut acc = KahanSum::new();
    for j in 1..=b {
        acc.add(ll(j));
        sig[zero + j as usize] = acc.value();
    }
    let mut acc = KahanSum::new();
    for j in (a..0).rev() {
        acc.add(-ll(j + 1));
        sig[(j - a) as usize] = acc.value();
    }
    Ok(sig[(lo - a) as usize..=(hi - a) as usize].to_vec())
}

/// Cached `Σ` and `ln|M|` over a window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialTable {
    pub a: i64,
    pub b: i64,
    pub p: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `ln|M(n)|`; `-inf` at `n = 0`.
    pub log_abs_m: Vec<f64>,
}

impl PotentialTable {
    pub fn build(env: &Environment, a: i64, b: i64) -> Result<Self> {
        if b < a {
            return Err(Error::invalid("empty window"));
        }
        let lo = a.min(0);
        let hi = b.max(0);
        let sigma_full = sigma_range(env, lo, hi)?;
        let zero = (-lo) as usize;
        let mut log_m = vec![f64::NEG_INFINITY; sigma_full.len()];
        let mut run = f64::NEG_INFINITY;
        for n in 1..=(hi as usize) {
            run = log_add_exp(run, sigma_full[zero + n - 1]);
            log_m[zero + n] = run;
        }
        let mut run = f64::NEG_INFINITY;
        for i in (0..zero).rev() {
            run = log_add_exp(run, sigma_full[i]);
            log_m[i] = run;
        }
        let off = (a - lo) as usize;
        let len = (b - a + 1) as usize;
        Ok(PotentialTable {
            a,
            b,
            p: env.table(a, b)?,
            sigma: sigma_full[off..off + len].to_vec(),
            log_abs_m: log_m[off..off + len].to_vec(),
        })
    }

    fn idx(&self, n: i64) -> Result<usize> {
        if n < self.a || n > self.b {
            return Err(Error::OutsideWindow(n));
        }
        Ok((n - self.a) as usize)
    }

    pub fn sigma(&self, n: i64) -> Result<f64> {
        Ok(self.sigma[self.idx(n)?])
    }

    /// `(sign, ln|M(n)|)`.
    pub fn log_m(&self, n: i64) -> Result<(i8, f64)> {
        let v = self.log_abs_m[self.idx(n)?];
        Ok((n.signum() as i8, v))
    }

    /// `M(n)` as a float; overflows to `±inf` for deep potentials.
    pub fn m(&self, n: i64) -> Result<f64> {
        let (s, l) = self.log_m(n)?;
        Ok(s as f64 * l.exp())
    }

    /// `ln sum_{j=lo}^{hi} e^{Σ(j)}`.
    pub fn log_weight(&self, lo: i64, hi: i64) -> Result<f64> {
        if hi < lo {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(log_sum_exp(&self.sigma[self.idx(lo)?..=self.idx(hi)?]))
    }

    /// `ln P_start(hit b before a)` for `a <= start <= b`, `a < b`, inside the window.
    pub fn log_hit_prob(&self, a: i64, start: i64, b: i64) -> Result<f64> {
        if !(a <= start && start <= b && a < b) {
            return Err(Error::invalid("need a <= start <= b with a < b"));
        }
        if start == a {
            return Ok(f64::NEG_INFINITY);
        }
        let num = self.log_weight(a, start - 1)?;
        let den = self.log_weight(a, b - 1)?;
        Ok(num - den)
    }

    pub fn hit_prob(&self, a: i64, start: i64, b: i64) -> Result<f64> {
        Ok(self.log_hit_prob(a, start, b)?.exp())
    }

    /// Largest rise `max_{k <= k'} Σ(k') - Σ(k)` over `[lo, hi]`.
    pub fn max_rise(&self, lo: i64, hi: i64) -> Result<f64> {
        Ok(max_rise(&self.sigma[self.idx(lo)?..=self.idx(hi)?]))
    }

    /// Largest leftward rise `max_{k' <= k} Σ(k') - Σ(k)` over `[lo, hi]`.
    pub fn max_left_rise(&self, lo: i64, hi: i64) -> Result<f64> {
        let mut s = self.sigma[self.idx(lo)?..=self.idx(hi)?].to_vec();
        s.reverse();
        Ok(max_rise(&s))
    }
}

fn max_rise(s: &[f64]) -> f64 {
    let mut lo = f64::INFINITY;
    let mut best: f64 = 0.0;
    for &v in s {
        lo = lo.min(v);
        best = best.max(v - lo);
    }
    best
}

/// `ln sum_{j >= s} e^{Σ(j)}`, exact for environments with a periodic right tail.
pub fn log_tail_right(env: &Environment, s: i64) -> Result<f64> {
    let tail = env
        .tails()
        .1
        .ok_or(Error::Divergent("right tail is not eventually periodic"))?;
    let t0 = s.max(tail.start);
    let sig = sigma_range(env, s, t0)?;
    let finite = log_sum_exp(&sig[..sig.len() - 1]);
    let st0 = *sig.last().unwrap();
    let len = tail.pattern.len() as i64;
    let mut c = Vec::with_capacity(len as usize);
    let mut acc = KahanSum::new();
    for m in 1..=len {
        let p = tail.pattern[(t0 + m - tail.start).rem_euclid(len) as usize];
        acc.add(log_lambda(p));
        c.push(acc.value());
    }
    let d = *c.last().unwrap();
    if d >= 0.0 {
        return Err(Error::Divergent("M(+inf) is infinite"));
    }
    let geo = log_sum_exp(&c) - (-d.exp_m1()).ln();
    Ok(log_add_exp(finite, st0 + log_add_exp(0.0, geo)))
}

/// `ln sum_{j <= s} e^{Σ(j)}`, exact for environments with a periodic left tail.
pub fn log_tail_left(env: &Environment, s: i64) -> Result<f64> {
    let tail = env
        .tails()
        .0
        .ok_or(Error::Divergent("left tail is not eventually periodic"))?;
    let t0 = s.min(tail.start);
    let sig = sigma_range(env, t0, s)?;
    let finite = log_sum_exp(&sig[1..]);
    let st0 = sig[0];
    let len = tail.pattern.len() as i64;
    let mut c = Vec::with_capacity(len as usize);
    let mut acc = KahanSum::new();
    for i in 0..len {
        let p = tail.pattern[(tail.start - t0 + i).rem_euclid(len) as usize];
        acc.add(-log_lambda(p));
        c.push(acc.value());
    }
    let d = *c.last().unwrap();
    if d >= 0.0 {
        return Err(Error::Divergent("M(-inf) is infinite"));
    }
    let geo = log_sum_exp(&c) - (-d.exp_m1()).ln();
    Ok(log_add_exp(finite, st0 + log_add_exp(0.0, geo)))
}

/// `P_start(hit b before a)`; `None` stands for `-inf` (for `a`) or `+inf` (for `b`).
pub fn hit_prob(env: &Environment, a: Option<i64>, start: i64, b: Option<i64>) -> Result<f64> {
    if a.is_some_and(|a| a >= start) || b.is_some_and(|b| b <= start) {
        return Err(Error::invalid("need a < start < b"));
    }
    let (num, rest) = match (a, b) {
        (Some(a), Some(b)) => {
            let t = PotentialTable::build(env, a, b)?;
            return t.hit_prob(a, start, b);
        }
        (None, Some(b)) => {
            let left = log_tail_left(env, start - 1)?;
            let t = sigma_range(env, start, b - 1)?;
            (left, log_sum_exp(&t))
        }
        (Some(a), None) => {
            let t = sigma_range(env, a, start - 1)?;
            (log_sum_exp(&t), log_tail_right(env, start)?)
        }
        (None, None) => {
            let left = log_tail_left(env, start - 1)?;
            (left, log_tail_right(env, start)?)
        }
    };
    Ok((num - log_add_exp(num, rest)).exp())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub horizon: i64,
    pub log_m_plus_horizon: f64,
    pub log_m_minus_horizon: f64,
    /// True when both tails are eventually periodic, so the limits are exact.
    pub limits_certified: bool,
    pub m_plus_infinite: Option<bool>,
    pub m_minus_infinite: Option<bool>,
    pub log_m_plus: Option<f64>,
    pub log_m_minus: Option<f64>,
    pub recurrent: bool,
    /// `P(Z_t -> +inf)`, when certifiable.
    pub escape_right_prob: Option<f64>,
}

/// Fraction of `ln sum_{j<n} e^Σ` carried by the outer half, used as the
/// horizon verdict when limits cannot be certified.
fn outer_share(sig: &[f64]) -> f64 {
    let half = sig.len() / 2;
    let all = log_sum_exp(sig);
    (log_sum_exp(&sig[half..]) - all).exp()
}

pub fn recurrence_report(env: &Environment, horizon: i64) -> Result<RecurrenceReport> {
    if horizon < 1 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let sig = sigma_range(env, -horizon, horizon - 1)?;
    let n = horizon as usize;
    let right = &sig[n..];
    let mut left = sig[..n].to_vec();
    left.reverse();
    let log_m_plus_horizon = log_sum_exp(right);
    let log_m_minus_horizon = log_sum_exp(&left);
    let (lt, rt) = env.tails();
    let certified = lt.is_some() && rt.is_some();
    let classify = |r: Result<f64>| -> Result<(bool, Option<f64>)> {
        match r {
            Ok(v) => Ok((false, Some(v))),
            Err(Error::Divergent(_)) => Ok((true, None)),
            Err(e) => Err(e),
        }
    };
    let (plus_inf, log_m_plus, minus_inf, log_m_minus) = if certified {
        let (pi, lp) = classify(log_tail_right(env, 0))?;
        let (mi, lm) = classify(log_tail_left(env, -1))?;
        (Some(pi), lp, Some(mi), lm)
    } else {
        (None, None, None, None)
    };
    let (recurrent, escape) = match (plus_inf, minus_inf) {
        (Some(true), Some(true)) => (true, Some(0.0)),
        (Some(true), Some(false)) => (false, Some(0.0)),
        (Some(false), Some(true)) => (false, Some(1.0)),
        (Some(false), Some(false)) => {
            let lp = log_m_plus.unwrap();
            let lm = log_m_minus.unwrap();
            (false, Some(1.0 / (1.0 + (lp - lm).exp())))
        }
        _ => (outer_share(right) > 1e-3 && outer_share(&left) > 1e-3, None),
    };
    Ok(RecurrenceReport {
        horizon,
        log_m_plus_horizon,
        log_m_minus_horizon,
        limits_certified: certified,
        m_plus_infinite: plus_inf,
        m_minus_infinite: minus_inf,
        log_m_plus,
        log_m_minus,
        recurrent,
        escape_right_prob: escape,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trap {
    /// Site of the highest point of the left barrier.
    pub left: i64,
    /// Bottom site closest to the origin.
    pub bottom: i64,
    /// Extent of the flat bottom.
    pub bottom_span: (i64, i64),
    pub right: i64,
    pub barrier_left: f64,
    pub barrier_right: f64,
    pub depth: f64,
}

const FLAT_TOL: f64 = 1e-12;

/// Local minima of `Σ` over `[a, b]` whose barriers on both sides exceed `threshold`.
pub fn find_traps(env: &Environment, a: i64, b: i64, threshold: f64) -> Result<Vec<Trap>> {
    let sig = sigma_range(env, a, b)?;
    Ok(traps_in(&sig, a, threshold))
}

pub fn traps_in(sig: &[f64], a: i64, threshold: f64) -> Vec<Trap> {
    let n = sig.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && (sig[j + 1] - sig[i]).abs() <= FLAT_TOL {
            j += 1;
        }
        let base = sig[i..=j].iter().copied().fold(f64::INFINITY, f64::min);
        let left_ok = i > 0 && sig[i - 1] > base + FLAT_TOL;
        let right_ok = j + 1 < n && sig[j + 1] > base + FLAT_TOL;
        if left_ok && right_ok {
            let (mut lmax, mut lsite) = (base, i);
            let mut k = i;
            while k > 0 {
                k -= 1;
                if sig[k] < base - FLAT_TOL {
                    break;
                }
                if sig[k] > lmax {
                    lmax = sig[k];
                    lsite = k;
                }
            }
            let (mut rmax, mut rsite) = (base, j);
            let mut k = j;
            while k + 1 < n {
                k += 1;
                if sig[k] < base - FLAT_TOL {
                    break;
                }
                if sig[k] > rmax {
                    rmax = sig[k];
                    rsite = k;
                }
            }
            let bl = lmax - base;
            let br = rmax - base;
            let depth = bl.min(br);
            if depth > threshold {
                let lo = a + i as i64;
                let hi = a + j as i64;
                let bottom = if lo <= 0 && hi >= 0 {
                    0
                } else if hi < 0 {
                    hi
                } else {
                    lo
                };
                out.push(Trap {
                    left: a + lsite as i64,
                    bottom,
                    bottom_span: (lo, hi),
                    right: a + rsite as i64,
                    barrier_left: bl,
                    barrier_right: br,
                    depth,
                });
            }
        }
        i = j + 1;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    C1,
    C2,
    C3,
}

impl std::str::FromStr for CriterionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Ok(Self::C1),
            "c2" => Ok(Self::C2),
            "c3" => Ok(Self::C3),
            _ => Err(Error::invalid(format!("unknown criterion '{s}'"))),
        }
    }
}

/// One defining inequality `value < bound` (or `>`), with signed slack.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    /// Positive when the inequality holds.
    pub slack: f64,
    pub holds: bool,
}

impl Check {
    pub fn greater(name: &str, value: f64, bound: f64) -> Self {
        let slack = value - bound;
        Check {
            name: name.into(),
            value,
            bound,
            slack,
            holds: slack > 0.0,
        }
    }

    pub fn less(name: &str, value: f64, bound: f64) -> Self {
        let slack = bound - value;
        Check {
            name: name.into(),
            value,
            bound,
            slack,
            holds: slack > 0.0,
        }
    }
}

/// A theoretical threshold replaced by a desk-scale choice.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Relaxation {
    pub condition: String,
    pub used: String,
    /// Whether the original condition happens to hold anyway.
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub kind: CriterionKind,
    pub n: i64,
    pub epsilon: f64,
    pub holds: bool,
    pub margin: f64,
    pub witnesses: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub relaxations: Vec<Relaxation>,
}

impl CriterionReport {
    fn finish(
        kind: CriterionKind,
        n: i64,
        epsilon: f64,
        witnesses: BTreeMap<String, f64>,
        checks: Vec<Check>,
        relaxations: Vec<Relaxation>,
    ) -> Self {
        let holds = checks.iter().all(|c| c.holds);
        let margin = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        CriterionReport {
            kind,
            n,
            epsilon,
            holds,
            margin,
            witnesses,
            checks,
            relaxations,
        }
    }
}

/// Witnesses for C3 supplied by the caller.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct C3Witness {
    pub u: f64,
    pub v: f64,
    pub w_minus: f64,
    pub w_plus: f64,
    pub u_prime: f64,
    pub v_prime: f64,
    pub w_prime_minus: f64,
    pub w_prime_plus: f64,
}

/// Desk-scale replacements for the theoretical constants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Thresholds {
    /// Fixed `A`; otherwise the smallest integer in `a_range` exceeding the measured rise.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default = "default_a_range")]
    pub a_range: (u32, u32),
    /// C2 scale candidates.
    #[serde(default)]
    pub l_candidates: Vec<i64>,
    /// Override for the C2c tolerance `N^{-1/eps^3}`.
    #[serde(default)]
    pub c2c_tolerance: Option<f64>,
    #[serde(default)]
    pub c3: Option<C3Witness>,
    #[serde(default)]
    pub q: Option<i64>,
    /// Fraction of `eps` used to place `w±` strictly inside `(v - eps, v + eps)`.
    #[serde(default = "default_theta")]
    pub theta: f64,
}

fn default_a_range() -> (u32, u32) {
    (1, 20)
}

fn default_theta() -> f64 {
    0.9
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            a: None,
            a_range: default_a_range(),
            l_candidates: Vec::new(),
            c2c_tolerance: None,
            c3: None,
            q: None,
            theta: default_theta(),
        }
    }
}

impl Thresholds {
    fn pick_a(&self, rise: f64) -> f64 {
        if let Some(a) = self.a {
            return a;
        }
        let (lo, hi) = self.a_range;
        (lo..=hi)
            .map(f64::from)
            .find(|&a| a > rise)
            .unwrap_or(f64::from(hi))
    }
}

fn a_relaxation(a: f64) -> Relaxation {
    Relaxation {
        condition: "A > 100".into(),
        used: format!("A = {a}"),
        satisfied: a > 100.0,
    }
}

/// `ln` that maps 0 to a large finite negative number so reports stay JSON-safe.
fn safe_ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        -1e300
    }
}

fn site(y: f64, n: i64) -> i64 {
    (y * n as f64).round() as i64
}

/// Runs a criterion check. `reference` supplies `Σ̄` for C3 (defaults to `Σ` itself).
pub fn check_criterion(
    kind: CriterionKind,
    env: &Environment,
    n: i64,
    epsilon: f64,
    thresholds: &Thresholds,
    reference: Option<&Environment>,
) -> Result<CriterionReport> {
    if n < 1 {
        return Err(Error::invalid("N must be >= 1"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    match kind {
        CriterionKind::C1 => check_c1(env, n),
        CriterionKind::C2 => check_c2(env, n, epsilon, thresholds),
        CriterionKind::C3 => check_c3(env, n, epsilon, thresholds, reference),
    }
}

fn check_c1(env: &Environment, n: i64) -> Result<CriterionReport> {
    let t = PotentialTable::build(env, -n, n)?;
    let root = (n as f64).sqrt();
    let plus = t.sigma(n)?;
    let minus = t.sigma(-n)?;
    let checks = vec![
        Check::greater("C1a+: Σ(N) > √N", plus, root),
        Check::greater("C1a-: Σ(-N) > √N", minus, root),
    ];
    Ok(CriterionReport::finish(
        CriterionKind::C1,
        n,
        0.0,
        BTreeMap::new(),
        checks,
        Vec::new(),
    ))
}

fn check_c2(env: &Environment, n: i64, eps: f64, th: &Thresholds) -> Result<CriterionReport> {
    let mut cands: Vec<i64> = th.l_candidates.iter().copied().filter(|&l| l >= 1).collect();
    cands.sort_unstable();
    cands.dedup();
    if cands.is_empty() {
        return Err(Error::invalid("C2 needs at least one L candidate"));
    }
    let lmax = *cands.last().unwrap();
    let t = PotentialTable::build(env, -n.max(lmax), n)?;
    let rise = t.max_rise(-n, n)?;
    let a = th.pick_a(rise);
    let check_b = Check::less("C2b: max rise Σ(k,k') < A", rise, a);
    let log_tol = match th.c2c_tolerance {
        Some(tol) => tol.ln(),
        None => -(n as f64).ln() / eps.powi(3),
    };
    let nf = n as f64;
    let mut best: Option<(f64, i64, Vec<Check>)> = None;
    for &l in &cands {
        let ca = Check::greater("C2a: Σ(-L) > √L", t.sigma(-l)?, (l as f64).sqrt());
        let kmax = n / l;
        let mut diff: f64 = 0.0;
        let base = env.table(0, l - 1)?;
        for k in -kmax..=kmax {
            if k == 0 {
                continue;
            }
            let shifted = env.table(k * l, k * l + l - 1)?;
            for (x, y) in base.iter().zip(&shifted) {
                diff = diff.max((x - y).abs());
            }
        }
        let cc = Check::less("C2c: ln max|p(j+kL) - p(j)| < ln tolerance", safe_ln(diff), log_tol);
        let checks = vec![ca, cc];
        let worst = checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        let ok = checks.iter().all(|c| c.holds);
        if ok {
            best = Some((worst, l, checks));
            break;
        }
        if best.as_ref().map(|b| worst > b.0).unwrap_or(true) {
            best = Some((worst, l, checks));
        }
    }
    let (_, l, mut checks) = best.unwrap();
    checks.insert(1, check_b);
    let lf = l as f64;
    let relaxations = vec![
        a_relaxation(a),
        Relaxation {
            condition: "e^{e^A} < L".into(),
            used: "dropped".into(),
            satisfied: a.exp() < lf.ln(),
        },
        Relaxation {
            condition: "L <= N^{eps^2}".into(),
            used: "dropped".into(),
            satisfied: lf.ln() <= eps * eps * nf.ln(),
        },
        Relaxation {
            condition: "N <= e^{L^0.1}".into(),
            used: "dropped".into(),
            satisfied: nf.ln() <= lf.powf(0.1),
        },
    ];
    let mut relaxations = relaxations;
    if let Some(tol) = th.c2c_tolerance {
        relaxations.push(Relaxation {
            condition: "C2c tolerance N^{-1/eps^3}".into(),
            used: format!("{tol:e}"),
            satisfied: tol.ln() <= -nf.ln() / eps.powi(3),
        });
    }
    let w = BTreeMap::from([("A".to_string(), a), ("L".to_string(), lf)]);
    Ok(CriterionReport::finish(
        CriterionKind::C2,
        n,
        eps,
        w,
        checks,
        relaxations,
    ))
}

fn argmin_site(t: &PotentialTable, lo: i64, hi: i64) -> Result<i64> {
    let mut best = lo;
    let mut val = t.sigma(lo)?;
    for k in lo + 1..=hi {
        let s = t.sigma(k)?;
        if s < val {
            val = s;
            best = k;
        }
    }
    Ok(best)
}

fn search_c3(t: &PotentialTable, n: i64, eps: f64, theta: f64) -> Result<C3Witness> {
    let nf = n as f64;
    let lo = (0.3 * nf).ceil() as i64;
    let hi = (0.4 * nf).floor() as i64;
    if hi < lo {
        return Err(Error::invalid("N too small for the range [0.3N, 0.4N]"));
    }
    let v = argmin_site(t, lo, hi)? as f64 / nf;
    let v_prime = -(argmin_site(t, -hi, -lo)? as f64) / nf;
    let u = 0.225 + 1.0 / nf;
    Ok(C3Witness {
        u,
        v,
        w_minus: v - theta * eps,
        w_plus: v + theta * eps,
        u_prime: u,
        v_prime,
        w_prime_minus: v_prime - theta * eps,
        w_prime_plus: v_prime + theta * eps,
    })
}

fn default_q(env: &Environment, n: i64) -> Option<i64> {
    let (_, freq, _, depth) = env.quasi_parts()?;
    let root = (n as f64).sqrt();
    (0..=depth)
        .filter_map(|k| freq.q_u64(k).ok())
        .filter(|&q| (q as f64) < root)
        .max()
        .map(|q| q as i64)
}

fn check_c3(
    env: &Environment,
    n: i64,
    eps: f64,
    th: &Thresholds,
    reference: Option<&Environment>,
) -> Result<CriterionReport> {
    let nf = n as f64;
    let root = nf.sqrt();
    let t = PotentialTable::build(env, -n, n)?;
    let w = match &th.c3 {
        Some(w) => w.clone(),
        None => search_c3(&t, n, eps, th.theta)?,
    };
    let mut checks = Vec::new();
    let order = |name: &str, lo: f64, hi: f64| Check::greater(name, hi, lo);
    for (side, u, v, wm, wp) in [
        ("", w.u, w.v, w.w_minus, w.w_plus),
        ("'", w.u_prime, w.v_prime, w.w_prime_minus, w.w_prime_plus),
    ] {
        checks.push(order(&format!("v{side} >= 0.3"), 0.3 - 1e-15, v));
        checks.push(order(&format!("v{side} <= 0.4"), v, 0.4 + 1e-15));
        checks.push(order(&format!("0.225 < u{side}"), 0.225, u));
        checks.push(order(&format!("u{side} < v{side} - eps"), u, v - eps));
        checks.push(order(&format!("v{side} - eps < w{side}_-"), v - eps, wm));
        checks.push(order(&format!("w{side}_- < v{side}"), wm, v));
        checks.push(order(&format!("v{side} < w{side}_+"), v, wp));
        checks.push(order(&format!("w{side}_+ < v{side} + eps"), wp, v + eps));
        checks.push(order(&format!("v{side} + eps < 0.5"), v + eps, 0.5));
    }
    let s = |y: f64| t.sigma(site(y, n));
    checks.push(Check::greater("C3a: Σ(vN, w+N) > √N", s(w.w_plus)? - s(w.v)?, root));
    checks.push(Check::greater("C3a: Σ(vN, w-N) > √N", s(w.w_minus)? - s(w.v)?, root));
    checks.push(Check::greater(
        "C3a: Σ(-v'N, -w'-N) > √N",
        s(-w.w_prime_minus)? - s(-w.v_prime)?,
        root,
    ));
    checks.push(Check::greater(
        "C3a: Σ(-v'N, -w'+N) > √N",
        s(-w.w_prime_plus)? - s(-w.v_prime)?,
        root,
    ));
    let rise_r = t.max_rise(site(-w.u_prime, n), site(w.v, n))?;
    let rise_l = t.max_left_rise(site(-w.v_prime, n), site(w.u, n))?;
    let a = th.pick_a(rise_r.max(rise_l));
    checks.push(Check::less("C3b: rightward rise on [-u'N, vN] < A", rise_r, a));
    checks.push(Check::less("C3b: leftward rise on [-v'N, uN] < A", rise_l, a));

    let q = match th.q.or_else(|| default_q(env, n)) {
        Some(q) => q,
        None => {
            return Err(Error::invalid(
                "C3 needs Q (pass thresholds.q for non-quasi-periodic environments)",
            ))
        }
    };
    if q < 1 {
        return Err(Error::invalid("Q must be >= 1"));
    }
    checks.push(Check::less("Q < √N", q as f64, root));
    let lo_l = -((w.v_prime * nf / q as f64).floor() as i64);
    let hi_l = (w.v * nf / q as f64).floor() as i64;
    let span_lo = lo_l * q;
    let span_hi = q + hi_l * q;
    let bar = match reference {
        Some(r) => PotentialTable::build(r, span_lo.min(-n), span_hi.max(n))?,
        None => PotentialTable::build(env, span_lo.min(-n), span_hi.max(n))?,
    };
    let mut per: f64 = 0.0;
    for k in 0..=q {
        let base = bar.sigma(k)?;
        for l in lo_l..=hi_l {
            per = per.max((bar.sigma(k + l * q)? - base).abs());
        }
    }
    checks.push(Check::less(
        "C3c: |Σ̄(k) - Σ̄(k+lQ)| < Q^{-1/2}",
        per,
        (q as f64).powf(-0.5),
    ));
    let mut b_zero: f64 = 0.0;
    let mut b_max = f64::NEG_INFINITY;
    for k in site(-w.v_prime, n)..=site(w.v, n) {
        let b = t.sigma(k)? - bar.sigma(k)?;
        b_max = b_max.max(b);
        if k >= site(-w.u_prime, n) && k <= site(w.u, n) {
            b_zero = b_zero.max(b.abs());
        }
    }
    checks.push(Check::less("C3c: |B| = 0 on [-u'N, uN]", b_zero, 1e-12));
    checks.push(Check::less("C3c: B <= 0 on [-v'N, vN]", b_max, 1e-12));

    let mut witnesses = BTreeMap::new();
    for (k, v) in [
        ("A", a),
        ("Q", q as f64),
        ("u", w.u),
        ("v", w.v),
        ("w_minus", w.w_minus),
        ("w_plus", w.w_plus),
        ("u_prime", w.u_prime),
        ("v_prime", w.v_prime),
        ("w_prime_minus", w.w_prime_minus),
        ("w_prime_plus", w.w_prime_plus),
    ] {
        witnesses.insert(k.to_string(), v);
    }
    let relaxations = vec![
        a_relaxation(a),
        Relaxation {
            condition: "e^{e^A} < Q".into(),
            used: "dropped".into(),
            satisfied: a.exp() < (q as f64).ln(),
        },
    ];
    Ok(CriterionReport::finish(
        CriterionKind::C3,
        n,
        eps,
        witnesses,
        checks,
        relaxations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{EnvSpec, ProceduralRule};

    fn trap(k: i64) -> Environment {
        Environment::build(&EnvSpec::Procedural(ProceduralRule::Trap { k })).unwrap()
    }

    /// `p = 1/3` for `j >= 1`, `2/3` for `j <= 0`.
    fn c1_trap() -> Environment {
        Environment::build(&EnvSpec::Procedural(ProceduralRule::Layered {
            first: 1,
            core: vec![],
            left: 2.0 / 3.0,
            right: 1.0 / 3.0,
        }))
        .unwrap()
    }

    #[test]
    fn fair_walk_has_linear_martingale() {
        let e = Environment::constant(0.5).unwrap();
        let t = PotentialTable::build(&e, -5, 5).unwrap();
        for n in -5..=5 {
            assert_eq!(t.sigma(n).unwrap(), 0.0);
            assert!((t.m(n).unwrap() - n as f64).abs() < 1e-12);
        }
        assert!((hit_prob(&e, Some(0), 3, Some(10)).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn geometric_martingale() {
        let e = Environment::constant(1.0 / 3.0).unwrap();
        let t = PotentialTable::build(&e, 0, 10).unwrap();
        for n in 1..=10 {
            let expect = 2f64.powi(n as i32) - 1.0;
            assert!((t.m(n).unwrap() - expect).abs() < 1e-10 * expect);
        }
        assert!((t.hit_prob(0, 1, 5).unwrap() - 1.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn trap_potential_rises_both_ways() {
        let t = PotentialTable::build(&trap(0), -10, 10).unwrap();
        let c = PotentialTable::build(&c1_trap(), -10, 10).unwrap();
        for n in 1..=10 {
            let nf = n as f64;
            assert!((t.sigma(n).unwrap() - nf * 2f64.ln()).abs() < 1e-12);
            assert!((t.sigma(-n).unwrap() - (nf - 1.0) * 2f64.ln()).abs() < 1e-12);
            assert!((c.sigma(-n).unwrap() - nf * 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_hit_probabilities() {
        let e = Environment::constant(2.0 / 3.0).unwrap();
        // Right-drifting walk started at 1 never hits 0 with probability 1/2.
        let p = hit_prob(&e, Some(0), 1, None).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        assert!(matches!(
            hit_prob(&e, None, 0, Some(5)),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn recurrence_of_fair_and_trap_walks() {
        let r = recurrence_report(&Environment::constant(0.5).unwrap(), 100).unwrap();
        assert!(r.recurrent && r.limits_certified);
        let r = recurrence_report(&trap(0), 100).unwrap();
        assert!(r.recurrent);
        let r = recurrence_report(&Environment::constant(0.6).unwrap(), 100).unwrap();
        assert_eq!(r.escape_right_prob, Some(1.0));
    }

    #[test]
    fn trap_detection() {
        assert!(find_traps(&Environment::constant(0.5).unwrap(), -50, 50, 0.1)
            .unwrap()
            .is_empty());
        let traps = find_traps(&trap(0), -100, 100, 10.0).unwrap();
        assert_eq!(traps.len(), 1);
        assert_eq!(traps[0].bottom_span, (-1, 0));
        assert_eq!(traps[0].bottom, 0);
        assert!((traps[0].depth - 99.0 * 2f64.ln()).abs() < 1e-9);
        let traps = find_traps(&c1_trap(), -100, 100, 10.0).unwrap();
        assert_eq!(traps.len(), 1);
        assert!((traps[0].depth - 100.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn c1_margin_on_trap() {
        let r = check_criterion(CriterionKind::C1, &c1_trap(), 100, 0.1, &Thresholds::default(), None)
            .unwrap();
        assert!(r.holds);
        assert!((r.margin - (100.0 * 2f64.ln() - 10.0)).abs() < 1e-9);
        let r = check_criterion(
            CriterionKind::C1,
            &Environment::constant(0.5).unwrap(),
            100,
            0.1,
            &Thresholds::default(),
            None,
        )
        .unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn c2_on_periodic_drift() {
        let e = Environment::periodic(vec![0.7, 0.45]).unwrap();
        let th = Thresholds {
            l_candidates: vec![32, 2, 4, 8, 16],
            ..Default::default()
        };
        let r = check_criterion(CriterionKind::C2, &e, 1000, 0.5, &th, None).unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.witnesses["L"], 16.0);
    }
}
