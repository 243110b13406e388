//! Monte Carlo trajectories, exact forward evolution, exit-time solvers and
//! renewal statistics.

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::numerics::{log_add_exp, KahanSum, MMatrixLu};
use crate::potential::sigma_range;

/// Right-step probabilities over `[first, first + len)`, constant-extended
/// beyond both ends. Accepts the degenerate values 0 and 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteTable {
    pub first: i64,
    pub p: Vec<f64>,
}

impl SiteTable {
    pub fn from_env(env: &Environment, a: i64, b: i64) -> Result<Self> {
        Ok(SiteTable {
            first: a,
            p: env.table(a, b)?,
        })
    }

    pub fn from_values(first: i64, p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::invalid("empty site table"));
        }
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("probability {v} outside [0, 1]")));
        }
        Ok(SiteTable { first, p })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::from_values(0, vec![p])
    }

    #[inline]
    pub fn get(&self, j: i64) -> f64 {
        let i = (j - self.first).clamp(0, self.p.len() as i64 - 1);
        self.p[i as usize]
    }

    pub fn last(&self) -> i64 {
        self.first + self.p.len() as i64 - 1
    }
}

/// What [`simulate`] keeps besides endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Record {
    #[default]
    Endpoints,
    MaxExcursion,
    /// Full paths of the first `count` trajectories, sampled every `stride` steps.
    Paths { count: usize, stride: u64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSummary {
    pub start: i64,
    pub t: u64,
    pub n_traj: usize,
    pub seed: u64,
    pub endpoints: Vec<i64>,
    /// `max_{s <= t} |Z_s - start|` per trajectory (only for `MaxExcursion`).
    pub max_excursion: Vec<i64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub mean_max_excursion: f64,
    pub largest_excursion: i64,
    pub paths: Vec<Vec<i64>>,
}

impl SampleSummary {
    pub fn histogram(&self) -> BTreeMap<i64, u64> {
        let mut h = BTreeMap::new();
        for &z in &self.endpoints {
            *h.entry(z).or_insert(0) += 1;
        }
        h
    }
}

/// The generator for trajectory `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[inline]
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Simulates `n_traj` walks of `t` steps from `start`. Trajectory `i` uses
/// stream `i` of `seed`, so output does not depend on the worker count.
pub fn simulate(
    table: &SiteTable,
    start: i64,
    t: u64,
    n_traj: usize,
    seed: u64,
    record: Record,
) -> Result<SampleSummary> {
    if n_traj == 0 {
        return Err(Error::invalid("n_traj must be >= 1"));
    }
    let runs: Vec<(i64, i64, Vec<i64>)> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let keep = match record {
                Record::Paths { count, stride } if i < count => Some(stride.max(1)),
                _ => None,
            };
            let mut path = Vec::new();
            let mut z = start;
            let mut far = 0i64;
            if keep.is_some() {
                path.push(z);
            }
            for s in 0..t {
                z += if uniform(&mut rng) < table.get(z) { 1 } else { -1 };
                far = far.max((z - start).abs());
                if let Some(k) = keep {
                    if (s + 1) % k == 0 {
                        path.push(z);
                    }
                }
            }
            (z, far, path)
        })
        .collect();
    let mut sum = KahanSum::new();
    let mut far_sum = KahanSum::new();
    let mut largest = 0;
    for r in &runs {
        sum.add(r.0 as f64);
        far_sum.add(r.1 as f64);
        largest = largest.max(r.1);
    }
    let n = n_traj as f64;
    let mean = sum.value() / n;
    let mut sq = KahanSum::new();
    for r in &runs {
        let d = r.0 as f64 - mean;
        sq.add(d * d);
    }
    let variance = if n_traj > 1 { sq.value() / (n - 1.0) } else { 0.0 };
    let max_excursion = if record == Record::MaxExcursion {
        runs.iter().map(|r| r.1).collect()
    } else {
        Vec::new()
    };
    let mut endpoints = Vec::with_capacity(n_traj);
    let mut paths = Vec::new();
    for (z, _, p) in runs {
        endpoints.push(z);
        if !p.is_empty() {
            paths.push(p);
        }
    }
    Ok(SampleSummary {
        start,
        t,
        n_traj,
        seed,
        endpoints,
        max_excursion,
        mean,
        variance,
        mean_max_excursion: far_sum.value() / n,
        largest_excursion: largest,
        paths,
    })
}

/// Monte Carlo exit sample from `(a, b)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitSample {
    pub n_traj: usize,
    pub right_fraction: f64,
    pub mean_tau: f64,
    pub var_tau: f64,
    pub taus: Vec<u64>,
    pub right: Vec<bool>,
}

pub fn simulate_exit(
    table: &SiteTable,
    a: i64,
    start: i64,
    b: i64,
    n_traj: usize,
    seed: u64,
    max_steps: u64,
) -> Result<ExitSample> {
    if !(a < start && start < b) || n_traj == 0 {
        return Err(Error::invalid("need a < start < b and n_traj >= 1"));
    }
    let runs: Vec<Option<(u64, bool)>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let mut z = start;
            let mut s = 0u64;
            while z > a && z < b {
                if s == max_steps {
                    return None;
                }
                z += if uniform(&mut rng) < table.get(z) { 1 } else { -1 };
                s += 1;
            }
            Some((s, z >= b))
        })
        .collect();
    if runs.iter().any(Option::is_none) {
        return Err(Error::invalid(format!(
            "some trajectories did not exit within {max_steps} steps"
        )));
    }
    let (taus, right): (Vec<u64>, Vec<bool>) = runs.into_iter().map(Option::unwrap).unzip();
    let n = n_traj as f64;
    let mean = taus.iter().map(|&t| t as f64).sum::<f64>() / n;
    let var = taus.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(ExitSample {
        n_traj,
        right_fraction: right.iter().filter(|&&r| r).count() as f64 / n,
        mean_tau: mean,
        var_tau: var,
        taus,
        right,
    })
}

/// Law of `Z_t` on the open window `(a, b)`; mass reaching `a` or `b` is
/// absorbed and booked as leakage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeDistribution {
    pub a: i64,
    pub b: i64,
    pub t: u64,
    /// Mass at sites `a + 1 ..= b - 1`.
    pub masses: Vec<f64>,
    pub leak_left: f64,
    pub leak_right: f64,
    /// Parity of the support when started from a point: `(start + t) mod 2`.
    pub parity: Option<i64>,
}

impl LatticeDistribution {
    pub fn point(a: i64, b: i64, start: i64) -> Result<Self> {
        if !(a < start && start < b) {
            return Err(Error::invalid("start must lie strictly inside the window"));
        }
        let mut masses = vec![0.0; (b - a - 1) as usize];
        masses[(start - a - 1) as usize] = 1.0;
        Ok(LatticeDistribution {
            a,
            b,
            t: 0,
            masses,
            leak_left: 0.0,
            leak_right: 0.0,
            parity: Some(start.rem_euclid(2)),
        })
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<i64> {
        self.a + 1..=self.b - 1
    }

    pub fn mass(&self, j: i64) -> f64 {
        if j <= self.a || j >= self.b {
            return 0.0;
        }
        self.masses[(j - self.a - 1) as usize]
    }

    pub fn total_mass(&self) -> f64 {
        let mut s = KahanSum::new();
        for &m in &self.masses {
            s.add(m);
        }
        s.value()
    }

    pub fn boundary_leakage(&self) -> f64 {
        self.leak_left + self.leak_right
    }

    /// Mass on `[lo, hi]`.
    pub fn window_mass(&self, lo: i64, hi: i64) -> f64 {
        let mut s = KahanSum::new();
        for j in lo.max(self.a + 1)..=hi.min(self.b - 1) {
            s.add(self.mass(j));
        }
        s.value()
    }

    /// `(site, mass)` for sites with positive mass.
    pub fn atoms(&self) -> Vec<(i64, f64)> {
        self.sites()
            .zip(self.masses.iter().copied())
            .filter(|(_, m)| *m > 0.0)
            .collect()
    }

    /// Advances one step.
    pub fn step(&mut self, pp: &[f64], qq: &[f64], ll: &mut KahanSum, lr: &mut KahanSum) {
        let n = self.masses.len();
        let cur = &self.masses;
        let mut next = vec![0.0; n];
        if n == 0 {
            return;
        }
        ll.add(qq[0] * cur[0]);
        lr.add(pp[n - 1] * cur[n - 1]);
        next[0] = if n > 1 { qq[1] * cur[1] } else { 0.0 };
        for k in 1..n.saturating_sub(1) {
            next[k] = pp[k - 1] * cur[k - 1] + qq[k + 1] * cur[k + 1];
        }
        if n > 1 {
            next[n - 1] = pp[n - 2] * cur[n - 2];
        }
        self.masses = next;
        self.t += 1;
        self.parity = self.parity.map(|p| 1 - p);
    }
}

fn step_arrays(table: &SiteTable, a: i64, b: i64) -> (Vec<f64>, Vec<f64>) {
    let pp: Vec<f64> = (a + 1..b).map(|j| table.get(j)).collect();
    let qq = pp.iter().map(|p| 1.0 - p).collect();
    (pp, qq)
}

/// Default window `[start - t - 1, start + t + 1]`: nothing can leak.
pub fn default_window(start: i64, t: u64) -> (i64, i64) {
    (start - t as i64 - 1, start + t as i64 + 1)
}

/// Exact law of `Z_t` for each requested time (ascending).
pub fn evolve_table_at(
    table: &SiteTable,
    start: i64,
    times: &[u64],
    window: (i64, i64),
) -> Result<Vec<LatticeDistribution>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times must be ascending"));
    }
    let (a, b) = window;
    let mut d = LatticeDistribution::point(a, b, start)?;
    let (pp, qq) = step_arrays(table, a, b);
    let mut ll = KahanSum::new();
    let mut lr = KahanSum::new();
    let mut out = Vec::with_capacity(times.len());
    let mut cur = vec![0.0; d.masses.len()];
    let mut next = vec![0.0; d.masses.len()];
    cur.copy_from_slice(&d.masses);
    let n = cur.len();
    let mut t = 0u64;
    for &target in times {
        while t < target {
            // Support after t steps from a point lies within start +- t.
            let lo = ((start - a - 1) - t as i64 - 1).max(0) as usize;
            let hi = (((start - a - 1) + t as i64 + 1) as usize).min(n - 1);
            ll.add(qq[0] * cur[0]);
            lr.add(pp[n - 1] * cur[n - 1]);
            advance(&cur, &mut next, &pp, &qq, lo, hi);
            std::mem::swap(&mut cur, &mut next);
            t += 1;
        }
        d.masses.copy_from_slice(&cur);
        d.t = t;
        d.leak_left = ll.value();
        d.leak_right = lr.value();
        d.parity = Some((start + t as i64).rem_euclid(2));
        out.push(d.clone());
    }
    Ok(out)
}

#[inline]
fn advance(cur: &[f64], next: &mut [f64], pp: &[f64], qq: &[f64], lo: usize, hi: usize) {
    let n = cur.len();
    if n == 1 {
        next[0] = 0.0;
        return;
    }
    if lo == 0 {
        next[0] = qq[1] * cur[1];
    }
    if hi == n - 1 {
        next[n - 1] = pp[n - 2] * cur[n - 2];
    }
    let s = lo.max(1);
    let e = hi.min(n - 2);
    if s > e {
        return;
    }
    let out = &mut next[s..=e];
    let left_p = &pp[s - 1..e];
    let left_m = &cur[s - 1..e];
    let right_q = &qq[s + 1..=e + 1];
    let right_m = &cur[s + 1..=e + 1];
    for i in 0..out.len() {
        out[i] = left_p[i] * left_m[i] + right_q[i] * right_m[i];
    }
}

pub fn evolve_table(
    table: &SiteTable,
    start: i64,
    t: u64,
    window: Option<(i64, i64)>,
) -> Result<LatticeDistribution> {
    let w = window.unwrap_or_else(|| default_window(start, t));
    Ok(evolve_table_at(table, start, &[t], w)?.pop().unwrap())
}

/// Exact law of `Z_t` started from `start`, absorbing at the window ends.
pub fn evolve_exact(
    env: &Environment,
    start: i64,
    t: u64,
    window: Option<(i64, i64)>,
) -> Result<LatticeDistribution> {
    let (a, b) = window.unwrap_or_else(|| default_window(start, t));
    let table = SiteTable::from_env(env, a, b)?;
    evolve_table(&table, start, t, Some((a, b)))
}

/// Exact exit statistics from `(a, b)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExitStats {
    pub a: i64,
    pub b: i64,
    pub start: i64,
    pub p_exit_right: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// `E[τ; exit at b]`.
    pub tau_right: f64,
    /// `E[η_k]` for `k = a+1 ..= b-1`.
    pub occupation: Vec<f64>,
    /// Probability of leaving `(a, b)` before returning, for `k = a+1 ..= b-1`.
    pub return_escape: Vec<f64>,
    /// `|sum_k E[η_k] - E[τ]| / E[τ]`.
    pub green_defect: f64,
}

impl ExitStats {
    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }

    /// `E[τ^s]` for `s = 1, 2, 3`.
    pub fn moment(&self, s: u32) -> f64 {
        match s {
            1 => self.m1,
            2 => self.m2,
            3 => self.m3,
            _ => f64::NAN,
        }
    }
}

/// Profiles over every start in `(a, b)`.
#[derive(Clone, Debug)]
pub struct ExitProfiles {
    pub a: i64,
    pub b: i64,
    pub h: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub m3: Vec<f64>,
    pub tau_right: Vec<f64>,
}

fn check_elliptic(pp: &[f64], a: i64) -> Result<()> {
    for (i, &p) in pp.iter().enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Ellipticity {
                site: (a + 1 + i as i64).to_string(),
                value: p,
            });
        }
    }
    Ok(())
}

/// Factors `I - P` on the interior sites; the walls absorb.
fn generator_lu(pp: &[f64], qq: &[f64]) -> Result<MMatrixLu> {
    let n = pp.len();
    let mut lower = qq.to_vec();
    let mut upper = pp.to_vec();
    let mut slack = vec![0.0; n];
    slack[0] += lower[0];
    lower[0] = 0.0;
    slack[n - 1] += upper[n - 1];
    upper[n - 1] = 0.0;
    MMatrixLu::factor(&lower, &upper, &slack)
}

pub fn exit_profiles(table: &SiteTable, a: i64, b: i64) -> Result<ExitProfiles> {
    if b - a < 2 {
        return Err(Error::invalid("need b - a >= 2"));
    }
    let (pp, qq) = step_arrays(table, a, b);
    check_elliptic(&pp, a)?;
    let n = pp.len();
    let lu = generator_lu(&pp, &qq)?;
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = pp[n - 1];
    let h = lu.solve(&rhs);
    let m1 = lu.solve(&vec![1.0; n]);
    let r2: Vec<f64> = m1.iter().map(|m| 2.0 * m - 1.0).collect();
    let m2 = lu.solve(&r2);
    let r3: Vec<f64> = m1
        .iter()
        .zip(&m2)
        .map(|(m1, m2)| 3.0 * (m2 - m1) + 1.0)
        .collect();
    let m3 = lu.solve(&r3);
    let tau_right = lu.solve(&h);
    Ok(ExitProfiles {
        a,
        b,
        h,
        m1,
        m2,
        m3,
        tau_right,
    })
}

pub fn exit_solve_table(
    table: &SiteTable,
    env_sigma: &[f64],
    a: i64,
    b: i64,
    start: i64,
) -> Result<ExitStats> {
    if !(a < start && start < b) {
        return Err(Error::invalid("need a < start < b"));
    }
    let prof = exit_profiles(table, a, b)?;
    let (pp, qq) = step_arrays(table, a, b);
    let n = pp.len();
    let i0 = (start - a - 1) as usize;
    // Transposed system for the Green row.
    let mut e = vec![0.0; n];
    e[i0] = 1.0;
    let green = generator_lu(&pp, &qq)?.solve_transposed(&e);
    let mut gs = KahanSum::new();
    for &g in &green {
        gs.add(g);
    }
    let m1 = prof.m1[i0];
    // env_sigma holds Σ(a..=b); forward/backward cumulative log weights.
    let len = (b - a + 1) as usize;
    if env_sigma.len() != len {
        return Err(Error::invalid("sigma slice must cover [a, b]"));
    }
    let mut fwd = vec![f64::NEG_INFINITY; len];
    let mut run = f64::NEG_INFINITY;
    for i in 0..len {
        run = log_add_exp(run, env_sigma[i]);
        fwd[i] = run;
    }
    let mut bwd = vec![f64::NEG_INFINITY; len];
    let mut run = f64::NEG_INFINITY;
    for i in (0..len - 1).rev() {
        run = log_add_exp(run, env_sigma[i]);
        bwd[i] = run;
    }
    let return_escape = (1..len - 1)
        .map(|i| {
            let right = (env_sigma[i] - bwd[i]).exp();
            let left = (env_sigma[i - 1] - fwd[i - 1]).exp();
            pp[i - 1] * right + qq[i - 1] * left
        })
        .collect();
    Ok(ExitStats {
        a,
        b,
        start,
        p_exit_right: prof.h[i0],
        m1,
        m2: prof.m2[i0],
        m3: prof.m3[i0],
        tau_right: prof.tau_right[i0],
        occupation: green,
        return_escape,
        green_defect: (gs.value() - m1).abs() / m1,
    })
}

/// Exact tridiagonal exit statistics from `start` in `(a, b)`.
pub fn exit_solve(env: &Environment, a: i64, b: i64, start: i64) -> Result<ExitStats> {
    let table = SiteTable::from_env(env, a, b)?;
    let sig = sigma_range(env, a, b)?;
    exit_solve_table(&table, &sig, a, b, start)
}

/// Exit-time law from `start` in `(a, b)`: `P(τ = t)` for `t < len`, plus
/// the mass not yet absorbed.
pub fn exit_time_law(
    table: &SiteTable,
    a: i64,
    b: i64,
    start: i64,
    remainder: f64,
    max_steps: u64,
) -> Result<(Vec<f64>, f64)> {
    let mut d = LatticeDistribution::point(a, b, start)?;
    let (pp, qq) = step_arrays(table, a, b);
    let mut ll = KahanSum::new();
    let mut lr = KahanSum::new();
    let mut law = vec![0.0];
    let mut absorbed = 0.0;
    while 1.0 - (ll.value() + lr.value()) > remainder {
        if d.t >= max_steps {
            break;
        }
        d.step(&pp, &qq, &mut ll, &mut lr);
        let now = ll.value() + lr.value();
        law.push(now - absorbed);
        absorbed = now;
    }
    Ok((law, d.total_mass()))
}

/// Renewal quantities for the `(-L, +L)` exit from 0 in an `L`-periodic environment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenewalStats {
    pub l: i64,
    pub mu_hat: f64,
    pub v_hat: f64,
    /// `E|τ - μ̂|^3`, from the exact exit-time law.
    pub gamma_hat: f64,
    pub p_right: f64,
    pub e_tau_sq: f64,
    /// `E[U]` with `U = ±L` the exit displacement.
    pub e_u: f64,
    /// `E[U τ]`.
    pub e_u_tau: f64,
    /// Unabsorbed mass left when truncating the exit-time law.
    pub law_remainder: f64,
}

impl RenewalStats {
    /// Renewal-reward CLT centering and scale for `Z_n`.
    pub fn predict(&self, n: f64) -> (f64, f64) {
        let v = self.e_u / self.mu_hat;
        let l = self.l as f64;
        let var_step = l * l - 2.0 * v * self.e_u_tau + v * v * self.e_tau_sq;
        (n * v, (n / self.mu_hat * var_step).sqrt())
    }

    /// `(L N / μ̂, L sqrt(V̂ N / μ̂^3))`, exact when every exit is to the right.
    pub fn predict_one_sided(&self, n: f64) -> (f64, f64) {
        let l = self.l as f64;
        (
            l * n / self.mu_hat,
            l * (self.v_hat * n / self.mu_hat.powi(3)).sqrt(),
        )
    }
}

pub fn renewal_stats(env: &Environment, l: i64) -> Result<RenewalStats> {
    if l < 1 {
        return Err(Error::invalid("L must be >= 1"));
    }
    match env.period() {
        Some(p) if l as u64 % p == 0 => {}
        _ => return Err(Error::NotPeriodic(l)),
    }
    let ex = exit_solve(env, -l, l, 0)?;
    let table = SiteTable::from_env(env, -l, l)?;
    let (law, rem) = exit_time_law(&table, -l, l, 0, 1e-15, 1 << 32)?;
    let mu = ex.m1;
    let mut g = KahanSum::new();
    for (t, &pm) in law.iter().enumerate() {
        g.add(pm * (t as f64 - mu).abs().powi(3));
    }
    let lf = l as f64;
    Ok(RenewalStats {
        l,
        mu_hat: mu,
        v_hat: ex.variance(),
        gamma_hat: g.value(),
        p_right: ex.p_exit_right,
        e_tau_sq: ex.m2,
        e_u: lf * (2.0 * ex.p_exit_right - 1.0),
        e_u_tau: lf * (2.0 * ex.tau_right - ex.m1),
        law_remainder: rem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_and_deterministic_drift() {
        let half = SiteTable::constant(0.5).unwrap();
        let s = simulate(&half, 0, 0, 50, 1, Record::Endpoints).unwrap();
        assert!(s.endpoints.iter().all(|&z| z == 0));
        let one = SiteTable::constant(1.0).unwrap();
        let s = simulate(&one, 0, 10, 50, 1, Record::Endpoints).unwrap();
        assert!(s.endpoints.iter().all(|&z| z == 10));
    }

    #[test]
    fn two_steps_of_fair_walk() {
        let e = Environment::constant(0.5).unwrap();
        let d = evolve_exact(&e, 0, 2, None).unwrap();
        assert_eq!(d.mass(-2), 0.25);
        assert_eq!(d.mass(0), 0.5);
        assert_eq!(d.mass(2), 0.25);
        assert_eq!(d.mass(1), 0.0);
    }

    #[test]
    fn one_step_uses_site_probability() {
        let e = Environment::tabulated(-1, vec![0.2, 0.7, 0.4]).unwrap();
        let d = evolve_exact(&e, 0, 1, None).unwrap();
        assert_eq!(d.mass(1), 0.7);
        assert!((d.mass(-1) - 0.3).abs() < 1e-16);
    }

    #[test]
    fn simple_walk_exit() {
        let e = Environment::constant(0.5).unwrap();
        let s = exit_solve(&e, -10, 10, 0).unwrap();
        assert!((s.p_exit_right - 0.5).abs() < 1e-14);
        assert!((s.m1 - 100.0).abs() < 1e-9);
        assert!((s.return_escape[9] - 0.1).abs() < 1e-14);
        assert!(s.green_defect < 1e-12);
    }

    #[test]
    fn gamblers_ruin_exit() {
        let e = Environment::constant(1.0 / 3.0).unwrap();
        let s = exit_solve(&e, 0, 5, 1).unwrap();
        assert!((s.p_exit_right - 1.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn renewal_of_fair_walk() {
        let e = Environment::constant(0.5).unwrap();
        let r = renewal_stats(&e, 10).unwrap();
        assert!((r.mu_hat - 100.0).abs() < 1e-9);
        assert!((r.p_right - 0.5).abs() < 1e-13);
        assert!(r.law_remainder < 1e-14);
        assert!(matches!(
            renewal_stats(&Environment::periodic(vec![0.6, 0.4, 0.5]).unwrap(), 4),
            Err(Error::NotPeriodic(4))
        ));
    }
}
