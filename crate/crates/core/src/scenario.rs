//! Reproducible end-to-end presets and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    c3_witness_from, diophantine_verdict, drift_profile, localization_verdict, one_sided_verdict,
    two_sided_verdict, mean_u, EngineChoice, ScenarioVerdict, TwoSidedConfig,
};
use crate::circlemap::{CircleMap, CohomologyMode};
use crate::constructions::{
    coboundary_from, g_perturbation, generic_env, k_map, perturbed_p, Coboundary, GPerturbation,
    GenericKind, GenericParams, PerturbationPlan,
};
use crate::engine::{simulate, Record, SiteTable};
use crate::environment::{EnvSpec, Environment};
use crate::error::{Error, Result};
use crate::frequency::{Frequency, FrequencySpec};
use crate::potential::{check_criterion, sigma_range, Check, CriterionKind, CriterionReport, Thresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Localization,
    OneSided,
    TwoSided,
    AsymmetricDrift,
    DiophantineWindow,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::Localization,
        ScenarioName::OneSided,
        ScenarioName::TwoSided,
        ScenarioName::AsymmetricDrift,
        ScenarioName::DiophantineWindow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Localization => "localization",
            ScenarioName::OneSided => "one-sided",
            ScenarioName::TwoSided => "two-sided",
            ScenarioName::AsymmetricDrift => "asymmetric-drift",
            ScenarioName::DiophantineWindow => "diophantine-window",
        }
    }
}

impl std::str::FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scenario '{s}'")))
    }
}

/// Scenario parameters. Fields a preset does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    /// Scale `N` (localization, one-sided, two-sided).
    pub n: i64,
    pub epsilon: f64,
    pub seed: u64,
    /// Monte Carlo trajectories; 0 disables the Monte Carlo checks.
    pub n_traj: usize,
    /// Time override (asymmetric-drift: `t`; diophantine-window: `T`).
    pub t: Option<u64>,
    /// Phase grid size for the drift profile.
    pub grid: usize,
    /// Renewal block length for the one-sided preset.
    pub l: i64,
}

impl ScenarioConfig {
    pub fn preset(name: ScenarioName) -> Self {
        let base = ScenarioConfig {
            name,
            n: 64,
            epsilon: 0.05,
            seed: 7,
            n_traj: 0,
            t: None,
            grid: 256,
            l: 2,
        };
        match name {
            ScenarioName::Localization => base,
            ScenarioName::OneSided => ScenarioConfig {
                n: 10_000,
                n_traj: 10_000,
                ..base
            },
            ScenarioName::TwoSided => ScenarioConfig { n: 2000, ..base },
            ScenarioName::AsymmetricDrift => ScenarioConfig {
                n: 0,
                n_traj: 20_000,
                t: Some(10_000),
                ..base
            },
            ScenarioName::DiophantineWindow => ScenarioConfig {
                n: 0,
                t: Some(1000),
                ..base
            },
        }
    }

    /// Applies `key=value` overrides; values parse as JSON, else as strings.
    pub fn with_overrides(&self, pairs: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        let obj = v.as_object_mut().expect("config serializes to an object");
        for pair in pairs {
            let (k, raw) = pair
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("override '{pair}' is not key=value")))?;
            let val = serde_json::from_str(raw).unwrap_or(serde_json::Value::String(raw.to_string()));
            obj.insert(k.trim().to_string(), val);
        }
        Ok(serde_json::from_value(v)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    C3,
    Asymmetric,
}

impl std::str::FromStr for PlanKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c3" => Ok(PlanKind::C3),
            "asymmetric" | "asymmetric-drift" => Ok(PlanKind::Asymmetric),
            _ => Err(Error::invalid(format!("unknown plan kind '{s}'"))),
        }
    }
}

/// A built construction with the environment spec it induces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioPlan {
    pub kind: PlanKind,
    pub alpha: FrequencySpec,
    /// Index of the convergent `p/q` used for the perturbation.
    pub q_index: usize,
    pub q: u64,
    pub n: u32,
    pub s: f64,
    /// `N_n = [(q η)^{-1}] q`.
    pub n_scale: f64,
    pub coboundary: Coboundary,
    pub perturbation: Option<PerturbationPlan>,
    pub g: Option<GPerturbation>,
    /// Environment built from the perturbed map.
    pub env: EnvSpec,
    /// Environment built from the unperturbed map.
    pub reference_env: EnvSpec,
}

/// The convergent index followed by the largest partial quotient.
pub fn best_index(freq: &Frequency) -> Result<usize> {
    let mut best = (0usize, 0.0f64);
    for k in 1..freq.depth() {
        let qk = freq.q(k)?;
        let qn = freq.q(k + 1)?;
        let ratio = BigRational::new(qn, qk.clone()).to_f64().unwrap_or(f64::INFINITY);
        if qk > BigInt::from(1) && ratio > best.1 {
            best = (k, ratio);
        }
    }
    if best.1 == 0.0 {
        return Err(Error::invalid("frequency too shallow to pick a convergent"));
    }
    Ok(best.0)
}

fn quasi_spec(map: CircleMap, alpha: &FrequencySpec, phase: &str) -> EnvSpec {
    EnvSpec::Quasiperiodic {
        map,
        alpha: alpha.clone(),
        phase: phase.to_string(),
        depth: None,
    }
}

/// Builds a C3 or asymmetric-drift construction over `alpha`.
///
/// C3: `p̄` is the symmetric coboundary approximant of `base`, perturbed by
/// `e_n`. Asymmetric: `p̄` is the asymmetric approximant of `base` plus `g_n`.
pub fn build_plan(
    kind: PlanKind,
    alpha: &FrequencySpec,
    n: u32,
    s: f64,
    base: &CircleMap,
    q_index: Option<usize>,
) -> Result<ScenarioPlan> {
    let freq = Frequency::build(alpha).map_err(|e| e.at_stage("frequency"))?;
    let q_index = match q_index {
        Some(k) => k,
        None => best_index(&freq)?,
    };
    let q = freq.q_u64(q_index)?;
    let eta = freq.eta_f64(q_index)?.abs();
    let n_scale = (1.0 / (q as f64 * eta)).floor() * q as f64;
    let mode = match kind {
        PlanKind::C3 => CohomologyMode::Symmetric,
        PlanKind::Asymmetric => CohomologyMode::Asymmetric,
    };
    let coboundary = coboundary_from(base, &freq, 8, mode).map_err(|e| e.at_stage("coboundary"))?;
    let p_bar = coboundary.p_bar.clone();
    let (p, perturbation, g) = match kind {
        PlanKind::C3 => {
            let plan = perturbed_p(&p_bar, n, q, s).map_err(|e| e.at_stage("perturbation"))?;
            (plan.p_n.clone(), Some(plan), None)
        }
        PlanKind::Asymmetric => {
            let g = g_perturbation(n, q, s).map_err(|e| e.at_stage("g perturbation"))?;
            (CircleMap::sum(vec![p_bar.clone(), g.map.clone()]), None, Some(g))
        }
    };
    Ok(ScenarioPlan {
        kind,
        alpha: alpha.clone(),
        q_index,
        q,
        n,
        s,
        n_scale,
        coboundary,
        perturbation,
        g,
        env: quasi_spec(p, alpha, "0"),
        reference_env: quasi_spec(p_bar, alpha, "0"),
    })
}

/// Frequency of the two-sided preset: `q = 8` followed by a quotient of 249.
pub fn c3_preset_alpha() -> FrequencySpec {
    FrequencySpec::quotients(&[2, 1, 1, 1, 249], 40)
}

/// Frequency of the asymmetric-drift preset: golden up to `q = 89`, then 10^4.
pub fn drift_preset_alpha() -> FrequencySpec {
    let mut qs = vec![1u64; 10];
    qs.push(10_000);
    FrequencySpec::quotients(&qs, 40)
}

pub fn c3_preset_plan() -> Result<ScenarioPlan> {
    build_plan(
        PlanKind::C3,
        &c3_preset_alpha(),
        20,
        0.6,
        &CircleMap::cosine(0.5, 0.1, 1),
        None,
    )
}

pub fn drift_preset_plan() -> Result<ScenarioPlan> {
    // amplitude 89^{-s} = 0.05
    let s = 20f64.ln() / 89f64.ln();
    build_plan(
        PlanKind::Asymmetric,
        &drift_preset_alpha(),
        2,
        s,
        &CircleMap::cosine(2.0 / 3.0, 0.05, 1),
        None,
    )
}

/// Everything a scenario measured, written as `verdict.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub scenario: ScenarioName,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub measured: BTreeMap<String, f64>,
    pub verdict: Option<ScenarioVerdict>,
    pub criterion: Option<CriterionReport>,
}

impl ScenarioOutcome {
    fn new(scenario: ScenarioName, checks: Vec<Check>, measured: BTreeMap<String, f64>) -> Self {
        ScenarioOutcome {
            scenario,
            pass: checks.iter().all(|c| c.holds),
            checks,
            measured,
            verdict: None,
            criterion: None,
        }
    }

    fn from_verdict(scenario: ScenarioName, v: ScenarioVerdict, criterion: Option<CriterionReport>) -> Self {
        ScenarioOutcome {
            scenario,
            pass: v.pass,
            checks: v.checks.clone(),
            measured: v.measured.clone(),
            verdict: Some(v),
            criterion,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ScenarioConfig,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub wall_clock_ms: u64,
    pub outputs: Vec<OutputRecord>,
    pub pass: bool,
}

impl RunManifest {
    pub fn output_hashes(&self) -> BTreeMap<String, String> {
        self.outputs
            .iter()
            .map(|o| (o.path.clone(), o.sha256.clone()))
            .collect()
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

struct Writer {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl Writer {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(OutputRecord {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.put(name, s.as_bytes())
    }
}

fn sigma_csv(env: &Environment, lo: i64, hi: i64) -> Result<String> {
    let sig = sigma_range(env, lo, hi)?;
    let mut out = String::from("k,sigma\n");
    for (i, s) in sig.iter().enumerate() {
        out.push_str(&format!("{},{}\n", lo + i as i64, s));
    }
    Ok(out)
}

fn stage<T>(r: Result<T>, name: &str) -> Result<T> {
    r.map_err(|e| e.at_stage(name))
}

/// Runs a preset, writes its outputs and `manifest.json` into `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, command: &str) -> Result<(RunManifest, ScenarioOutcome)> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;
    let mut w = Writer {
        dir: out_dir.to_path_buf(),
        outputs: Vec::new(),
    };
    w.json("config.json", config)?;
    let outcome = match config.name {
        ScenarioName::Localization => run_localization(config, &mut w)?,
        ScenarioName::OneSided => run_one_sided(config, &mut w)?,
        ScenarioName::TwoSided => run_two_sided(config, &mut w)?,
        ScenarioName::AsymmetricDrift => run_asymmetric(config, &mut w)?,
        ScenarioName::DiophantineWindow => run_diophantine(config, &mut w)?,
    };
    w.json("verdict.json", &outcome)?;
    let manifest = RunManifest {
        command: command.to_string(),
        config: config.clone(),
        seed: config.seed,
        versions: BTreeMap::from([("qpwalk".to_string(), env!("CARGO_PKG_VERSION").to_string())]),
        wall_clock_ms: started.elapsed().as_millis() as u64,
        outputs: w.outputs.clone(),
        pass: outcome.pass,
    };
    let mut s = serde_json::to_string_pretty(&manifest)?;
    s.push('\n');
    fs::write(out_dir.join(MANIFEST_FILE), s)?;
    Ok((manifest, outcome))
}

fn run_localization(c: &ScenarioConfig, w: &mut Writer) -> Result<ScenarioOutcome> {
    let g = stage(
        generic_env(
            GenericKind::Localization,
            &GenericParams {
                k: 0,
                k1: 0,
                k2: 0,
                base: None,
            },
        ),
        "construction",
    )?;
    let env = stage(Environment::build(&g.spec), "environment")?;
    w.json("env.json", &g.spec)?;
    let report = stage(
        check_criterion(CriterionKind::C1, &env, c.n, c.epsilon, &Thresholds::default(), None),
        "criterion",
    )?;
    w.json("criterion.json", &report)?;
    w.put("sigma_profile.csv", stage(sigma_csv(&env, -c.n, c.n), "potential")?.as_bytes())?;
    let engine = if c.n_traj > 0 {
        EngineChoice::MonteCarlo {
            n_traj: c.n_traj,
            seed: c.seed,
        }
    } else {
        EngineChoice::Exact
    };
    let v = stage(localization_verdict(&env, c.n, engine), "verdict")?;
    Ok(ScenarioOutcome::from_verdict(c.name, v, Some(report)))
}

fn run_one_sided(c: &ScenarioConfig, w: &mut Writer) -> Result<ScenarioOutcome> {
    let env = stage(Environment::periodic(vec![0.7, 0.45]), "environment")?;
    w.json("env.json", env.spec())?;
    let th = Thresholds {
        l_candidates: vec![2, 4, 8, 16, 32, 64],
        ..Thresholds::default()
    };
    let report = stage(
        check_criterion(CriterionKind::C2, &env, c.n, c.epsilon, &th, None),
        "criterion",
    )?;
    w.json("criterion.json", &report)?;
    w.put("sigma_profile.csv", stage(sigma_csv(&env, -c.n.min(4096), c.n.min(4096)), "potential")?.as_bytes())?;
    let mc = (c.n_traj > 0).then_some((c.n_traj, c.seed));
    let v = stage(one_sided_verdict(&env, c.n, c.epsilon, c.l, mc), "verdict")?;
    Ok(ScenarioOutcome::from_verdict(c.name, v, Some(report)))
}

fn run_two_sided(c: &ScenarioConfig, w: &mut Writer) -> Result<ScenarioOutcome> {
    let plan = c3_preset_plan()?;
    w.json("plan.json", &plan)?;
    let env = stage(Environment::build(&plan.env), "environment")?;
    let reference = stage(Environment::build(&plan.reference_env), "environment")?;
    let th = Thresholds {
        q: Some(plan.q as i64),
        ..Thresholds::default()
    };
    let report = stage(
        check_criterion(CriterionKind::C3, &env, c.n, c.epsilon, &th, Some(&reference)),
        "criterion",
    )?;
    w.json("criterion.json", &report)?;
    w.put("sigma_profile.csv", stage(sigma_csv(&env, -c.n, c.n), "potential")?.as_bytes())?;
    let witness = stage(c3_witness_from(&report), "criterion")?;
    let cfg = TwoSidedConfig {
        t: c.t,
        ..TwoSidedConfig::default()
    };
    let v = stage(two_sided_verdict(&env, c.n, c.epsilon, &witness, &cfg), "verdict")?;
    Ok(ScenarioOutcome::from_verdict(c.name, v, Some(report)))
}

/// `c = min_x a K(x) / (1 + a/p̄(x))`, the least relative drop of `λ` on the plateau.
pub fn plateau_depletion(p_bar: &CircleMap, amplitude: f64) -> f64 {
    let k = k_map(p_bar);
    (0..4096)
        .map(|i| {
            let x = i as f64 / 4096.0;
            amplitude * k.eval(x) / (1.0 + amplitude / p_bar.eval(x))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Drift-split measurements for the asymmetric preset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftSplit {
    pub t: f64,
    pub mean_u_bar: f64,
    pub b: f64,
    pub u_emp: f64,
    pub min_margin: f64,
    pub predicted_ratio: f64,
    pub rows: Vec<DriftRow>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftRow {
    pub x: f64,
    pub b_t: u64,
    pub b_t_bar: u64,
    pub in_j: bool,
    pub in_j_prime: bool,
}

pub fn drift_split(plan: &ScenarioPlan, t: f64, grid: usize) -> Result<DriftSplit> {
    let g = plan
        .g
        .as_ref()
        .ok_or_else(|| Error::invalid("drift split needs an asymmetric plan"))?;
    let freq = Frequency::build(&plan.alpha)?;
    let tol = 1e-12;
    let p_bar = &plan.coboundary.p_bar;
    let p = CircleMap::sum(vec![p_bar.clone(), g.map.clone()]);
    let ubar = mean_u(p_bar, freq.alpha_f64(), tol)?;
    let b = t / ubar;
    let pert = drift_profile(&p, &freq, t, grid, tol)?;
    let unpert = drift_profile(p_bar, &freq, t, grid, tol)?;
    let mut rows = Vec::with_capacity(grid);
    let mut u_emp: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    for (r, rb) in pert.iter().zip(&unpert) {
        let row = DriftRow {
            x: r.x,
            b_t: r.b_t,
            b_t_bar: rb.b_t,
            in_j: g.in_j(r.x),
            in_j_prime: g.in_j_prime(r.x),
        };
        if row.in_j {
            u_emp = u_emp.max((r.b_t as f64 - b).abs());
        }
        if row.in_j_prime {
            min_margin = min_margin.min(r.b_t as f64 - b);
        }
        rows.push(row);
    }
    let c = plateau_depletion(p_bar, g.amplitude);
    let predicted_ratio = c * (ubar - 1.0) / (ubar - c * (ubar - 1.0));
    Ok(DriftSplit {
        t,
        mean_u_bar: ubar,
        b,
        u_emp,
        min_margin,
        predicted_ratio,
        rows,
    })
}

/// Monte Carlo mean displacement at `t` from phase `i/grid`.
pub fn drift_monte_carlo(
    plan: &ScenarioPlan,
    i: usize,
    grid: usize,
    t: u64,
    n_traj: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let p = match &plan.env {
        EnvSpec::Quasiperiodic { map, .. } => map.clone(),
        _ => return Err(Error::invalid("plan environment is not quasi-periodic")),
    };
    let env = Environment::build(&quasi_spec(p, &plan.alpha, &format!("{i}/{grid}")))?;
    let ti = t as i64;
    let table = SiteTable::from_env(&env, -ti - 1, ti + 1)?;
    let s = simulate(&table, 0, t, n_traj, seed, Record::Endpoints)?;
    Ok((s.mean, s.variance.sqrt()))
}

fn run_asymmetric(c: &ScenarioConfig, w: &mut Writer) -> Result<ScenarioOutcome> {
    let plan = drift_preset_plan()?;
    w.json("plan.json", &plan)?;
    let t = c.t.unwrap_or(10_000);
    let split = stage(drift_split(&plan, t as f64, c.grid), "drift profile")?;
    let mut csv = String::from("x,b_t,b_t_unperturbed,in_j,in_j_prime\n");
    for r in &split.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.x, r.b_t, r.b_t_bar, r.in_j as u8, r.in_j_prime as u8
        ));
    }
    w.put("drift_profile.csv", csv.as_bytes())?;
    let tf = t as f64;
    let mut measured = BTreeMap::from([
        ("mean_u_bar".to_string(), split.mean_u_bar),
        ("b".to_string(), split.b),
        ("u_emp".to_string(), split.u_emp),
        ("min_margin".to_string(), split.min_margin),
        ("margin_ratio".to_string(), split.min_margin / split.b),
        ("predicted_ratio".to_string(), split.predicted_ratio),
    ]);
    let mut checks = vec![
        Check::less("U_emp on J < t^(1/4)", split.u_emp, tf.powf(0.25)),
        Check::greater(
            "min margin / b on J' >= predicted depletion ratio",
            split.min_margin / split.b,
            split.predicted_ratio,
        ),
    ];
    if c.n_traj > 0 {
        let picks = mc_phases(&split.rows);
        for (k, &i) in picks.iter().enumerate() {
            let (mean, sd) = stage(
                drift_monte_carlo(&plan, i, c.grid, t, c.n_traj, c.seed.wrapping_add(k as u64)),
                "monte carlo",
            )?;
            let b_t = split.rows[i].b_t as f64;
            measured.insert(format!("mc_mean@{i}"), mean);
            measured.insert(format!("b_t@{i}"), b_t);
            checks.push(Check::less(
                &format!("|mc mean - b_t| < 3 sd/sqrt(n) at x = {i}/{}", c.grid),
                (mean - b_t).abs(),
                3.0 * sd / (c.n_traj as f64).sqrt(),
            ));
        }
    }
    Ok(ScenarioOutcome::new(c.name, checks, measured))
}

/// Two grid phases in `𝒥` and two in `𝒥'`.
pub fn mc_phases(rows: &[DriftRow]) -> Vec<usize> {
    let j: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].in_j).collect();
    let jp: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].in_j_prime).collect();
    let mut out = Vec::new();
    for set in [&j, &jp] {
        if let Some(&a) = set.first() {
            out.push(a);
        }
        if set.len() > 1 {
            out.push(set[set.len() / 2]);
        }
    }
    out
}

fn run_diophantine(c: &ScenarioConfig, w: &mut Writer) -> Result<ScenarioOutcome> {
    let freq = Frequency::build(&FrequencySpec::Golden)?;
    let co = stage(
        coboundary_from(&CircleMap::cosine(0.5, 0.1, 1), &freq, 8, CohomologyMode::Symmetric),
        "coboundary",
    )?;
    let spec = quasi_spec(co.p_bar.clone(), &FrequencySpec::Golden, "0");
    w.json("env.json", &spec)?;
    let env = stage(Environment::build(&spec), "environment")?;
    let t = c.t.unwrap_or(1000);
    w.put("sigma_profile.csv", stage(sigma_csv(&env, -(t as i64), t as i64), "potential")?.as_bytes())?;
    let v = stage(diophantine_verdict(&env, t, c.epsilon), "verdict")?;
    Ok(ScenarioOutcome::from_verdict(c.name, v, None))
}

/// Re-runs `manifest` into `out_dir` and lists outputs whose hashes differ.
pub fn replay(manifest: &RunManifest, out_dir: &Path) -> Result<(RunManifest, Vec<String>)> {
    let (m, _) = run_scenario(&manifest.config, out_dir, &manifest.command)?;
    let old = manifest.output_hashes();
    let new = m.output_hashes();
    let mut diff: Vec<String> = old
        .iter()
        .filter(|(k, v)| new.get(*k) != Some(v))
        .map(|(k, _)| k.clone())
        .collect();
    diff.extend(new.keys().filter(|k| !old.contains_key(*k)).cloned());
    Ok((m, diff))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse() {
        let c = ScenarioConfig::preset(ScenarioName::Localization)
            .with_overrides(&["n=100".into(), "t=5".into()])
            .unwrap();
        assert_eq!(c.n, 100);
        assert_eq!(c.t, Some(5));
        assert!(ScenarioConfig::preset(ScenarioName::Localization)
            .with_overrides(&["bogus=1".into()])
            .is_err());
    }

    #[test]
    fn best_index_picks_large_quotient() {
        let f = Frequency::build(&c3_preset_alpha()).unwrap();
        let k = best_index(&f).unwrap();
        assert_eq!(f.q_u64(k).unwrap(), 8);
        let f = Frequency::build(&drift_preset_alpha()).unwrap();
        assert_eq!(f.q_u64(best_index(&f).unwrap()).unwrap(), 89);
    }
}
