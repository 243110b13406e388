//! Statistical verdicts and the asymmetric-walk quantities `u`, `b_t` and `ρ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circlemap::{frac, CircleMap};
use crate::engine::{
    default_window, evolve_exact, evolve_table_at, renewal_stats, simulate, LatticeDistribution,
    Record, SiteTable,
};
use crate::environment::{symmetry_defect, Environment};
use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::numerics::{normal_cdf, KahanSum};
use crate::potential::{hit_prob, C3Witness, Check, CriterionReport};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// Retained mass the moments are normalised by.
    pub mass: f64,
    pub leakage: f64,
}

/// Mean and variance of the retained law (normalised by its mass).
pub fn moments(dist: &LatticeDistribution) -> Moments {
    let mut m0 = KahanSum::new();
    let mut m1 = KahanSum::new();
    for (j, m) in dist.sites().zip(&dist.masses) {
        m0.add(*m);
        m1.add(*m * j as f64);
    }
    let mass = m0.value();
    let mean = m1.value() / mass;
    let mut v = KahanSum::new();
    for (j, m) in dist.sites().zip(&dist.masses) {
        let d = j as f64 - mean;
        v.add(*m * d * d);
    }
    Moments {
        mean,
        variance: v.value() / mass,
        mass,
        leakage: dist.boundary_leakage(),
    }
}

/// `sup_z |F((Z - mu)/sigma <= z) - Φ(z)|` over the atoms of `atoms`, with
/// both one-sided limits of the step function checked at every jump.
pub fn ks_phi_atoms(atoms: &[(f64, f64)], mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("empty distribution"));
    }
    let mut sorted: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.1 > 0.0).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut cum = KahanSum::new();
    let mut d: f64 = 0.0;
    for (x, m) in sorted {
        let phi = normal_cdf((x - mu) / sigma);
        d = d.max((cum.value() / total - phi).abs());
        cum.add(m);
        d = d.max((cum.value() / total - phi).abs());
    }
    Ok(d)
}

pub fn ks_phi(dist: &LatticeDistribution, mu: f64, sigma: f64) -> Result<f64> {
    let atoms: Vec<(f64, f64)> = dist.atoms().into_iter().map(|(j, m)| (j as f64, m)).collect();
    ks_phi_atoms(&atoms, mu, sigma)
}

pub fn ks_phi_samples(samples: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    let atoms: Vec<(f64, f64)> = samples.iter().map(|&x| (x, 1.0)).collect();
    ks_phi_atoms(&atoms, mu, sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Localization,
    OneSided,
    TwoSided,
    DiophantineClt,
}

impl std::str::FromStr for VerdictKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "localization" => Ok(Self::Localization),
            "one-sided" => Ok(Self::OneSided),
            "two-sided" => Ok(Self::TwoSided),
            "diophantine-clt" | "clt" => Ok(Self::DiophantineClt),
            _ => Err(Error::invalid(format!("unknown verdict kind '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "engine", rename_all = "kebab-case")]
pub enum EngineChoice {
    #[default]
    Exact,
    MonteCarlo { n_traj: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioVerdict {
    pub kind: VerdictKind,
    pub n: i64,
    pub epsilon: f64,
    /// Time scale as a formula in `N`, and the concrete value used.
    pub t_formula: String,
    pub t: u64,
    pub measured: BTreeMap<String, f64>,
    /// Gating inequalities.
    pub checks: Vec<Check>,
    /// Reported but not gating.
    pub diagnostics: Vec<Check>,
    pub leakage: f64,
    pub leakage_budget: f64,
    pub pass: bool,
}

impl ScenarioVerdict {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        kind: VerdictKind,
        n: i64,
        epsilon: f64,
        t_formula: &str,
        t: u64,
        measured: BTreeMap<String, f64>,
        checks: Vec<Check>,
        diagnostics: Vec<Check>,
        leakage: f64,
        leakage_budget: f64,
    ) -> Self {
        let pass = checks.iter().all(|c| c.holds);
        ScenarioVerdict {
            kind,
            n,
            epsilon,
            t_formula: t_formula.into(),
            t,
            measured,
            checks,
            diagnostics,
            leakage,
            leakage_budget,
            pass,
        }
    }
}

/// Localization at `T = ⌈e^{√N/4}⌉`: tail of `max |Z_t|` beyond `16 (ln T)^2`
/// and `Var(Z_T)` against `300 (ln T)^4`.
pub fn localization_verdict(env: &Environment, n: i64, engine: EngineChoice) -> Result<ScenarioVerdict> {
    let t = ((n as f64).sqrt() / 4.0).exp().ceil() as u64;
    let lt = (t as f64).ln();
    let r = 16.0 * lt * lt;
    let wall = r.floor() as i64 + 1;
    let mut measured = BTreeMap::new();
    let (tail, var, leak) = match engine {
        EngineChoice::Exact => {
            let capped = evolve_exact(env, 0, t, Some((-wall, wall)))?;
            let free = evolve_exact(env, 0, t, None)?;
            let m = moments(&free);
            (capped.boundary_leakage(), m.variance, free.boundary_leakage())
        }
        EngineChoice::MonteCarlo { n_traj, seed } => {
            let table = SiteTable::from_env(env, -(t as i64) - 1, t as i64 + 1)?;
            let s = simulate(&table, 0, t, n_traj, seed, Record::MaxExcursion)?;
            let over = s.max_excursion.iter().filter(|&&m| m as f64 > r).count();
            (over as f64 / n_traj as f64, s.variance, 0.0)
        }
    };
    measured.insert("radius".into(), r);
    measured.insert("tail_probability".into(), tail);
    measured.insert("variance".into(), var);
    let checks = vec![
        Check::less("P(max|Z_t| > 16 (ln T)^2) < T^-2", tail, (t as f64).powi(-2)),
        Check::less("Var(Z_T) < 300 (ln T)^4", var, 300.0 * lt.powi(4)),
    ];
    Ok(ScenarioVerdict::finish(
        VerdictKind::Localization,
        n,
        0.0,
        "ceil(exp(sqrt(N)/4))",
        t,
        measured,
        checks,
        Vec::new(),
        leak,
        0.0,
    ))
}

/// One-sided drift at `T = N` with the renewal prediction over blocks of length `L`.
pub fn one_sided_verdict(
    env: &Environment,
    n: i64,
    epsilon: f64,
    l: i64,
    monte_carlo: Option<(usize, u64)>,
) -> Result<ScenarioVerdict> {
    let t = n as u64;
    let rs = renewal_stats(env, l)?;
    let (mu, sigma) = rs.predict(n as f64);
    let (mu_p, sigma_p) = rs.predict_one_sided(n as f64);
    let dist = evolve_exact(env, 0, t, None)?;
    let ks = ks_phi(&dist, mu, sigma)?;
    let m = moments(&dist);
    let tf = t as f64;
    let mut measured = BTreeMap::from([
        ("mu".to_string(), mu),
        ("sigma".to_string(), sigma),
        ("mu_one_sided_form".to_string(), mu_p),
        ("sigma_one_sided_form".to_string(), sigma_p),
        ("mu_hat".to_string(), rs.mu_hat),
        ("v_hat".to_string(), rs.v_hat),
        ("gamma_hat".to_string(), rs.gamma_hat),
        ("p_right".to_string(), rs.p_right),
        ("ks".to_string(), ks),
        ("exact_mean".to_string(), m.mean),
        ("exact_sd".to_string(), m.variance.sqrt()),
    ]);
    let mut checks = vec![Check::less("ks_phi(Z_T; mu, sigma) < eps", ks, epsilon)];
    if let Some((n_traj, seed)) = monte_carlo {
        let table = SiteTable::from_env(env, -(t as i64) - 1, t as i64 + 1)?;
        let s = simulate(&table, 0, t, n_traj, seed, Record::Endpoints)?;
        let nt = n_traj as f64;
        let sd = s.variance.sqrt();
        measured.insert("mc_mean".into(), s.mean);
        measured.insert("mc_sd".into(), sd);
        checks.push(Check::less(
            "|mc mean - mu| < 3 sd/sqrt(n)",
            (s.mean - mu).abs(),
            3.0 * sd / nt.sqrt(),
        ));
        checks.push(Check::less(
            "|mc sd - sigma| < 3 sd/sqrt(2n)",
            (sd - sigma).abs(),
            3.0 * sd / (2.0 * nt).sqrt(),
        ));
    }
    let diagnostics = vec![
        Check::greater("mu > T^(1-eps)", mu, tf.powf(1.0 - epsilon)),
        Check::less(
            "|ln sigma / ln T - 1/2| < eps",
            (sigma.ln() / tf.ln() - 0.5).abs(),
            epsilon,
        ),
    ];
    Ok(ScenarioVerdict::finish(
        VerdictKind::OneSided,
        n,
        epsilon,
        "N",
        t,
        measured,
        checks,
        diagnostics,
        dist.boundary_leakage(),
        0.0,
    ))
}

pub fn c3_witness_from(report: &CriterionReport) -> Result<C3Witness> {
    let g = |k: &str| {
        report
            .witnesses
            .get(k)
            .copied()
            .ok_or_else(|| Error::invalid(format!("criterion report lacks witness '{k}'")))
    };
    Ok(C3Witness {
        u: g("u")?,
        v: g("v")?,
        w_minus: g("w_minus")?,
        w_plus: g("w_plus")?,
        u_prime: g("u_prime")?,
        v_prime: g("v_prime")?,
        w_prime_minus: g("w_prime_minus")?,
        w_prime_plus: g("w_prime_plus")?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoSidedConfig {
    /// Defaults to `5 N^2`.
    pub t: Option<u64>,
    /// Absorbing walls at `±wall`; defaults to `⌈0.55 N⌉`.
    pub wall: Option<i64>,
    pub leakage_budget: f64,
}

impl Default for TwoSidedConfig {
    fn default() -> Self {
        TwoSidedConfig {
            t: None,
            wall: None,
            leakage_budget: 1e-6,
        }
    }
}

/// Two-sided drift: masses near both traps at time `T` and the splitting
/// probabilities from the flat middle.
pub fn two_sided_verdict(
    env: &Environment,
    n: i64,
    epsilon: f64,
    w: &C3Witness,
    cfg: &TwoSidedConfig,
) -> Result<ScenarioVerdict> {
    let nf = n as f64;
    let t = cfg.t.unwrap_or((5 * n * n) as u64);
    let wall = cfg.wall.unwrap_or((0.55 * nf).ceil() as i64);
    let site = |y: f64| (y * nf).round() as i64;
    env.check_window(-wall, wall)?;
    let dist = evolve_exact(env, 0, t, Some((-wall, wall)))?;
    let right = dist.window_mass(site(w.w_minus), site(w.w_plus));
    let left = dist.window_mass(site(-w.w_prime_plus), site(-w.w_prime_minus));
    let leak = dist.boundary_leakage();
    let (a, b) = (site(-w.v_prime), site(w.v));
    let mut measured = BTreeMap::from([
        ("mass_right_window".to_string(), right),
        ("mass_left_window".to_string(), left),
    ]);
    let mut checks = vec![
        Check::greater("mass [w-N, w+N] > 0.1", right, 0.1),
        Check::greater("mass [-w'+N, -w'-N] > 0.1", left, 0.1),
    ];
    let h0 = hit_prob(env, Some(a), 0, Some(b))?;
    measured.insert("split_from_0".into(), h0);
    checks.push(Check::less("P_0(vN before -v'N) <= 0.89", h0, 0.89));
    checks.push(Check::less("P_0(-v'N before vN) <= 0.89", 1.0 - h0, 0.89));
    let mut diagnostics = Vec::new();
    for (name, s) in [("-u'N", site(-w.u_prime)), ("uN", site(w.u))] {
        let h = hit_prob(env, Some(a), s, Some(b))?;
        measured.insert(format!("split_from_{name}"), h);
        diagnostics.push(Check::less(&format!("P_{name}(vN before -v'N) <= 0.89"), h, 0.89));
        diagnostics.push(Check::less(&format!("P_{name}(-v'N before vN) <= 0.89"), 1.0 - h, 0.89));
    }
    checks.push(Check::less("leakage < budget", leak, cfg.leakage_budget));
    Ok(ScenarioVerdict::finish(
        VerdictKind::TwoSided,
        n,
        epsilon,
        "5 N^2",
        t,
        measured,
        checks,
        diagnostics,
        leak,
        cfg.leakage_budget,
    ))
}

/// CLT check of the exact law at each time; `mu`/`sigma` of `None` are
/// matched to the exact moments at that time.
pub fn clt_verdict(
    env: &Environment,
    times: &[u64],
    mu: Option<f64>,
    sigma: Option<f64>,
    epsilon: f64,
) -> Result<ScenarioVerdict> {
    let mut times = times.to_vec();
    times.sort_unstable();
    times.dedup();
    let tmax = *times.last().ok_or_else(|| Error::invalid("no times"))?;
    let (a, b) = default_window(0, tmax);
    let table = SiteTable::from_env(env, a, b)?;
    let dists = evolve_table_at(&table, 0, &times, (a, b))?;
    let mut measured = BTreeMap::new();
    let mut checks = Vec::new();
    for d in &dists {
        let m = moments(d);
        let mu_t = mu.unwrap_or(m.mean);
        let sd_t = sigma.unwrap_or(m.variance.sqrt());
        let ks = ks_phi(d, mu_t, sd_t)?;
        measured.insert(format!("mu@{}", d.t), mu_t);
        measured.insert(format!("sigma@{}", d.t), sd_t);
        measured.insert(format!("ks@{}", d.t), ks);
        checks.push(Check::less(&format!("ks_phi at t = {} < eps", d.t), ks, epsilon));
    }
    let formula = if times.len() > 1 {
        "T, 2T, 4T, 8T"
    } else {
        "T"
    };
    Ok(ScenarioVerdict::finish(
        VerdictKind::DiophantineClt,
        0,
        epsilon,
        formula,
        times[0],
        measured,
        checks,
        Vec::new(),
        0.0,
        0.0,
    ))
}

/// The diophantine-window check on the geometric grid `T, 2T, 4T, 8T`.
pub fn diophantine_verdict(env: &Environment, t: u64, epsilon: f64) -> Result<ScenarioVerdict> {
    clt_verdict(env, &[t, 2 * t, 4 * t, 8 * t], None, None, epsilon)
}

/// Tail certificate for `sum_k prod_{j<k} λ(x + s j α)`: the block length
/// `L`, `θ = sup_x prod_{j<L} λ(x + s j α) < 1` and the largest partial
/// product within a block, all sups over a 4096-point grid.
#[derive(Clone, Copy, Debug)]
struct TailBound {
    block: usize,
    theta: f64,
    reach: f64,
}

const MAX_BLOCK: usize = 4096;

fn lambda_of(p: &CircleMap) -> impl Fn(f64) -> f64 + '_ {
    move |y: f64| {
        let v = p.eval(frac(y));
        (1.0 - v) / v
    }
}

/// `(sup prod_{j<L}, sup max_{r<L} prod_{j<r})` over block starts `xs`.
fn block_sups(p: &CircleMap, xs: &[f64], step: f64, block: usize) -> (f64, f64) {
    let lam = lambda_of(p);
    let mut theta: f64 = 0.0;
    let mut reach: f64 = 1.0;
    for &x in xs {
        let mut prod = 1.0;
        for j in 0..block {
            reach = reach.max(prod);
            prod *= lam(x + j as f64 * step);
        }
        theta = theta.max(prod);
    }
    (theta, reach)
}

fn tail_bound(p: &CircleMap, alpha: f64, sign: f64) -> Result<TailBound> {
    let mut xs: Vec<f64> = (0..4096).map(|i| i as f64 / 4096.0).collect();
    xs.extend(p.breakpoints());
    let step = sign * alpha;
    let mut block = 1;
    let mut last = f64::INFINITY;
    while block <= MAX_BLOCK {
        let (theta, reach) = block_sups(p, &xs, step, block);
        if theta < 1.0 {
            return Ok(TailBound { block, theta, reach });
        }
        last = theta;
        block *= 2;
    }
    Err(Error::Tail(last))
}

/// `sum_{k >= 0} prod_{j=j0}^{j0+k-1} λ(x + s j α)`, stopping once the
/// block certificate bounds the remainder below `tol`.
fn certified_series(
    p: &CircleMap,
    bound: &TailBound,
    x: f64,
    alpha: f64,
    sign: f64,
    j0: i64,
    tol: f64,
) -> Result<(f64, usize)> {
    let lam = lambda_of(p);
    let probes: Vec<f64> = (0..256).map(|j| x + sign * (j0 + j) as f64 * alpha).collect();
    let (probe_theta, probe_reach) = block_sups(p, &probes, sign * alpha, bound.block);
    let theta = bound.theta.max(probe_theta);
    if theta >= 1.0 {
        return Err(Error::Tail(theta));
    }
    let factor = bound.block as f64 * bound.reach.max(probe_reach) / (1.0 - theta) - 1.0;
    let mut sum = KahanSum::new();
    let mut term = 1.0;
    sum.add(term);
    let mut k = 0usize;
    loop {
        let j = j0 + k as i64;
        term *= lam(x + sign * j as f64 * alpha);
        sum.add(term);
        k += 1;
        if term * factor < tol {
            break;
        }
        if k > 100_000_000 {
            return Err(Error::Tail(theta));
        }
    }
    Ok((sum.value(), k))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftResult {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    pub b_t: u64,
    /// True when the map was reflected to make the drift point right.
    pub reflected: bool,
    pub terms: usize,
}

/// Orientation helper: the map and phase with rightward drift.
fn oriented(p: &CircleMap) -> Result<(CircleMap, bool)> {
    let d = symmetry_defect(p)?;
    if d == 0.0 {
        return Err(Error::invalid("symmetric map has no drift"));
    }
    if d > 0.0 {
        Ok((p.clone(), false))
    } else {
        Ok((p.reflected_probability(), true))
    }
}

/// `u(x) = 1 + 2 sum_{k>=0} prod_{j=0}^{k} λ(x - jα)`.
pub fn u_value(p: &CircleMap, alpha: f64, x: f64, tol: f64) -> Result<(f64, usize)> {
    u_value_with(p, &tail_bound(p, alpha, -1.0)?, alpha, x, tol)
}

fn u_value_with(p: &CircleMap, bound: &TailBound, alpha: f64, x: f64, tol: f64) -> Result<(f64, usize)> {
    let (s, k) = certified_series(p, bound, x, alpha, -1.0, 0, tol / 2.0)?;
    // The series starts at the empty product 1.
    Ok((2.0 * s - 1.0, k))
}

/// Mean of `u` over the circle by a 4096-point rectangle rule.
pub fn mean_u(p: &CircleMap, alpha: f64, tol: f64) -> Result<f64> {
    use rayon::prelude::*;
    let bound = tail_bound(p, alpha, -1.0)?;
    let us: Vec<f64> = (0..4096)
        .into_par_iter()
        .map(|i| u_value_with(p, &bound, alpha, i as f64 / 4096.0, tol).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut acc = KahanSum::new();
    for u in us {
        acc.add(u);
    }
    Ok(acc.value() / 4096.0)
}

/// `u(x)` and `b_t(x)`, the first `b` with `sum_{k=0}^{b} u(x + kα) >= t`.
pub fn u_and_drift(p: &CircleMap, alpha: &Frequency, x: f64, t: f64, tol: f64) -> Result<DriftResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let (pm, reflected) = oriented(p)?;
    let a = alpha.alpha_f64();
    drift_at(&pm, &tail_bound(&pm, a, -1.0)?, reflected, a, x, t, tol)
}

fn drift_at(
    pm: &CircleMap,
    bound: &TailBound,
    reflected: bool,
    a: f64,
    x: f64,
    t: f64,
    tol: f64,
) -> Result<DriftResult> {
    let x0 = if reflected { frac(-x) } else { x };
    let (u0, terms) = u_value_with(pm, bound, a, x0, tol)?;
    let lam = |y: f64| {
        let v = pm.eval(frac(y));
        (1.0 - v) / v
    };
    let mut acc = KahanSum::new();
    let mut u = u0;
    let mut b = 0u64;
    acc.add(u);
    while acc.value() < t {
        b += 1;
        u = 1.0 + lam(x0 + b as f64 * a) * (1.0 + u);
        acc.add(u);
    }
    Ok(DriftResult {
        x,
        t,
        u: u0,
        b_t: b,
        reflected,
        terms,
    })
}

/// `b_t` over a uniform grid of phases.
pub fn drift_profile(p: &CircleMap, alpha: &Frequency, t: f64, grid: usize, tol: f64) -> Result<Vec<DriftResult>> {
    use rayon::prelude::*;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let (pm, reflected) = oriented(p)?;
    let a = alpha.alpha_f64();
    let bound = tail_bound(&pm, a, -1.0)?;
    (0..grid)
        .into_par_iter()
        .map(|i| drift_at(&pm, &bound, reflected, a, i as f64 / grid as f64, t, tol))
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationaryDensity {
    pub xs: Vec<f64>,
    pub rho: Vec<f64>,
    /// `max |ρ(x) - p(x-α)ρ(x-α) - q(x+α)ρ(x+α)|`.
    pub eqim_residual: f64,
    /// `max |p(x)ρ(x) - q(x+α)ρ(x+α) - 1|`.
    pub flux_defect: f64,
    pub reflected: bool,
    pub tol: f64,
}

/// `ρ(x) = (1/p(x)) sum_{k>=0} prod_{j=1}^{k} λ(x + jα)`.
pub fn rho_value(p: &CircleMap, alpha: f64, x: f64, tol: f64) -> Result<f64> {
    rho_value_with(p, &tail_bound(p, alpha, 1.0)?, alpha, x, tol)
}

fn rho_value_with(p: &CircleMap, bound: &TailBound, alpha: f64, x: f64, tol: f64) -> Result<f64> {
    let px = p.eval(frac(x));
    let (s, _) = certified_series(p, bound, x, alpha, 1.0, 1, tol * px)?;
    Ok(s / px)
}

pub fn stationary_density(p: &CircleMap, alpha: &Frequency, grid: usize, tol: f64) -> Result<StationaryDensity> {
    use rayon::prelude::*;
    if grid == 0 || !(tol > 0.0) {
        return Err(Error::invalid("grid and tolerance must be positive"));
    }
    let (pm, reflected) = oriented(p)?;
    let a = alpha.alpha_f64();
    // Each ρ is certified to tol/8 so the three-term identities stay within tol.
    let inner = tol / 8.0;
    let bound = tail_bound(&pm, a, 1.0)?;
    let rows: Vec<(f64, f64, f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64, f64)> {
            let x = i as f64 / grid as f64;
            let r0 = rho_value_with(&pm, &bound, a, x, inner)?;
            let rm = rho_value_with(&pm, &bound, a, frac(x - a), inner)?;
            let rp = rho_value_with(&pm, &bound, a, frac(x + a), inner)?;
            let p = |y: f64| pm.eval(frac(y));
            let res = r0 - p(x - a) * rm - (1.0 - p(x + a)) * rp;
            let flux = p(x) * r0 - (1.0 - p(x + a)) * rp - 1.0;
            Ok((x, r0, res.abs(), flux.abs()))
        })
        .collect::<Result<_>>()?;
    Ok(StationaryDensity {
        xs: rows.iter().map(|r| r.0).collect(),
        rho: rows.iter().map(|r| r.1).collect(),
        eqim_residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        flux_defect: rows.iter().map(|r| r.3).fold(0.0, f64::max),
        reflected,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::FrequencySpec;

    #[test]
    fn simple_walk_moments() {
        let e = Environment::constant(0.5).unwrap();
        let m = moments(&evolve_exact(&e, 0, 2, None).unwrap());
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.variance, 2.0);
    }

    #[test]
    fn point_mass_is_far_from_normal() {
        let e = Environment::constant(0.5).unwrap();
        let d = evolve_exact(&e, 0, 0, None).unwrap();
        assert!(ks_phi(&d, 0.3, 2.0).unwrap() >= 0.5);
    }

    #[test]
    fn constant_drift_u_and_rho() {
        let golden = Frequency::build(&FrequencySpec::Golden).unwrap();
        for (p, u) in [(2.0 / 3.0, 3.0), (0.75, 2.0)] {
            let m = CircleMap::constant(p);
            let r = u_and_drift(&m, &golden, 0.1, 101.0, 1e-13).unwrap();
            assert!((r.u - u).abs() < 1e-12);
            assert_eq!(r.b_t, (101.0 / u).ceil() as u64 - 1);
            let rho = stationary_density(&m, &golden, 8, 1e-12).unwrap();
            assert!(rho.rho.iter().all(|v| (v - u).abs() < 1e-11));
        }
    }

    #[test]
    fn reflection_is_applied_for_left_drift() {
        let golden = Frequency::build(&FrequencySpec::Golden).unwrap();
        let r = u_and_drift(&CircleMap::constant(0.25), &golden, 0.0, 10.0, 1e-12).unwrap();
        assert!(r.reflected);
        assert!((r.u - 2.0).abs() < 1e-11);
    }
}
