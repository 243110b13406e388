mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qpwalk::analysis::{self, clt_verdict, diophantine_verdict, moments, stationary_density};
use qpwalk::circlemap::CircleMap;
use qpwalk::constructions::{generic_env, GenericKind, GenericParams};
use qpwalk::engine::{evolve_exact, exit_solve, simulate, simulate_exit, Record, SiteTable};
use qpwalk::environment::{EnvSpec, Environment, ProceduralRule};
use qpwalk::frequency::FrequencySpec;
use qpwalk::parallel;
use qpwalk::potential::{check_criterion, find_traps, recurrence_report, CriterionKind, PotentialTable, Thresholds};
use qpwalk::scenario::{self, build_plan, PlanKind, RunManifest, ScenarioConfig, ScenarioName};
use serde_json::json;

use crate::io::{emit, load_env, parse_cosine, parse_list, parse_map, parse_window, print_json, to_json, Csv};

/// Random walks in periodic and quasi-periodic environments.
#[derive(Parser)]
#[command(name = "qpwalk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect environment specs.
    #[command(subcommand)]
    Env(EnvCmd),
    /// Potential tables and trap search.
    #[command(subcommand)]
    Potential(PotentialCmd),
    /// Conditions C1-C3.
    #[command(subcommand)]
    Criteria(CriteriaCmd),
    /// Monte Carlo, exact evolution and exit statistics.
    #[command(subcommand)]
    Walk(WalkCmd),
    /// Moments, CLT checks, drift profiles and stationary densities.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Constructions and reproducible preset runs.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Subcommand)]
enum EnvCmd {
    /// Writes an environment spec as JSON.
    Build(EnvBuild),
    /// Summarises an environment over a window.
    Inspect(EnvInspect),
}

#[derive(Args)]
struct EnvBuild {
    /// Constant right-step probability.
    #[arg(long, group = "source")]
    constant: Option<f64>,
    /// Comma-separated period values.
    #[arg(long, group = "source")]
    periodic: Option<String>,
    /// 1/3 beyond +K, 2/3 beyond -K, 1/2 in between.
    #[arg(long, group = "source")]
    trap: Option<i64>,
    /// Quasi-periodic map as JSON or @file.
    #[arg(long, group = "source")]
    map: Option<String>,
    /// Quasi-periodic map c + a cos(2 pi k x) given as c,a,k.
    #[arg(long, group = "source")]
    cosine: Option<String>,
    /// Generic environment kind: localization, clt, two-sided.
    #[arg(long, group = "source")]
    generic: Option<String>,
    #[arg(long, default_value = "golden")]
    alpha: String,
    #[arg(long, default_value = "0")]
    phase: String,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    k: i64,
    #[arg(long, default_value_t = 0)]
    k1: i64,
    #[arg(long, default_value_t = 0)]
    k2: i64,
    /// Mirror the walk: p'(j) = 1 - p(-j).
    #[arg(long)]
    reflect: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvArg {
    /// Environment spec JSON (or a plan / generic env containing one).
    #[arg(long)]
    env: PathBuf,
}

#[derive(Args)]
struct WindowArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = -32)]
    from: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 32)]
    to: i64,
}

#[derive(Args)]
struct EnvInspect {
    #[command(flatten)]
    env: EnvArg,
    #[command(flatten)]
    window: WindowArgs,
    /// Horizon for the recurrence report.
    #[arg(long, default_value_t = 4096)]
    horizon: i64,
    /// Also write p(j) over the window as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PotentialCmd {
    /// k, p, sigma, ln|M| over a window as CSV.
    Table {
        #[command(flatten)]
        env: EnvArg,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Potential wells with both barriers above a threshold.
    Traps {
        #[command(flatten)]
        env: EnvArg,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CriteriaCmd {
    /// Evaluates C1, C2 or C3 at scale N; exit code 2 when it fails.
    Check(CriteriaCheck),
}

#[derive(Args)]
struct CriteriaCheck {
    #[command(flatten)]
    env: EnvArg,
    #[arg(long, value_parser = parse_kind)]
    kind: CriterionKind,
    #[arg(long)]
    n: i64,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Thresholds JSON file; flags below override its fields.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Comma-separated block lengths L for C2.
    #[arg(long)]
    l: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    /// Period q of the coboundary reference for C3.
    #[arg(long)]
    q: Option<i64>,
    /// Unperturbed reference environment for C3.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<CriterionKind, String> {
    s.parse().map_err(|e: qpwalk::Error| e.to_string())
}

#[derive(Subcommand)]
enum WalkCmd {
    /// Monte Carlo trajectories; endpoint histogram as CSV.
    Simulate {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        start: i64,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 10_000)]
        n_traj: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = RecordArg::Endpoints)]
        record: RecordArg,
        /// Site window a,b; defaults to start -+ (t + 1).
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact law of Z_t; masses as CSV.
    Exact {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        start: i64,
        #[arg(long)]
        t: u64,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exit probability and time moments from (a, b).
    Exit {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true)]
        b: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        start: i64,
        /// Also estimate by Monte Carlo with this many trajectories.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RecordArg {
    Endpoints,
    MaxExcursion,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Mean and variance of the exact law of Z_t.
    Moments {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        start: i64,
        #[arg(long)]
        t: u64,
    },
    /// KS distance to a normal law at each time; exit code 2 when any exceeds epsilon.
    Clt {
        #[command(flatten)]
        env: EnvArg,
        /// Comma-separated times; `--window-from T` uses T, 2T, 4T, 8T instead.
        #[arg(long)]
        times: Option<String>,
        #[arg(long)]
        window_from: Option<u64>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
    /// u(x) and b_t(x) on a phase grid as CSV.
    DriftProfile {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationary density of the circle process as CSV.
    Stationary {
        #[command(flatten)]
        env: EnvArg,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Builds a C3 or asymmetric-drift construction and writes the plan.
    Build(ScenarioBuild),
    /// Runs a preset (or replays a manifest) into an output directory.
    Run(ScenarioRun),
}

#[derive(Args)]
struct ScenarioBuild {
    /// c3 or asymmetric.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value = "golden")]
    alpha: String,
    /// Amplitude exponent: the perturbation scales as q^-s.
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    /// Base map as JSON or @file.
    #[arg(long)]
    base: Option<String>,
    /// Base map c,a,k.
    #[arg(long, conflicts_with = "base")]
    cosine: Option<String>,
    /// Convergent index; defaults to the one before the largest quotient.
    #[arg(long)]
    q_index: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioRun {
    #[arg(long, required_unless_present_any = ["manifest", "config"])]
    name: Option<String>,
    /// Full config JSON.
    #[arg(long, conflicts_with = "manifest")]
    config: Option<PathBuf>,
    /// key=value overrides, repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
    /// Replays a manifest and compares output hashes.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Pass, fail, or nothing to judge.
enum Outcome {
    Done,
    Verdict(bool),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parallel::env_workers()
        .map_err(anyhow::Error::from)
        .and_then(|w| parallel::install(w, || run(cli.command)).map_err(anyhow::Error::from))
        .and_then(|r| r);
    match result {
        Ok(Outcome::Done) | Ok(Outcome::Verdict(true)) => ExitCode::SUCCESS,
        Ok(Outcome::Verdict(false)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Env(EnvCmd::Build(a)) => env_build(a),
        Command::Env(EnvCmd::Inspect(a)) => env_inspect(a),
        Command::Potential(c) => potential(c),
        Command::Criteria(CriteriaCmd::Check(a)) => criteria_check(a),
        Command::Walk(c) => walk(c),
        Command::Analyze(c) => analyze(c),
        Command::Scenario(ScenarioCmd::Build(a)) => scenario_build(a),
        Command::Scenario(ScenarioCmd::Run(a)) => scenario_run(a),
    }
}

fn env_build(a: EnvBuild) -> Result<Outcome> {
    let quasi = |map: CircleMap| -> Result<EnvSpec> {
        Ok(EnvSpec::Quasiperiodic {
            map,
            alpha: a.alpha.parse::<FrequencySpec>()?,
            phase: a.phase.clone(),
            depth: a.depth,
        })
    };
    let mut extra = None;
    let spec = if let Some(p) = a.constant {
        EnvSpec::Periodic { values: vec![p] }
    } else if let Some(v) = &a.periodic {
        EnvSpec::Periodic { values: parse_list(v)? }
    } else if let Some(k) = a.trap {
        EnvSpec::Procedural(ProceduralRule::Trap { k })
    } else if let Some(m) = &a.map {
        quasi(parse_map(m)?)?
    } else if let Some(c) = &a.cosine {
        quasi(parse_cosine(c)?)?
    } else if let Some(kind) = &a.generic {
        let kind: GenericKind = kind.parse()?;
        let g = generic_env(
            kind,
            &GenericParams {
                k: a.k,
                k1: a.k1,
                k2: a.k2,
                base: None,
            },
        )?;
        extra = Some(json!({ "ratio": g.ratio, "escape_right_prob": g.escape_right_prob, "layer_p": g.layer_p }));
        g.spec
    } else {
        bail!("give one of --constant, --periodic, --trap, --map, --cosine, --generic");
    };
    let spec = if a.reflect {
        EnvSpec::Reflected { inner: Box::new(spec) }
    } else {
        spec
    };
    // Reject invalid environments before writing anything.
    Environment::build(&spec)?;
    let text = match extra {
        Some(info) => to_json(&json!({ "env": spec, "generic": info }))?,
        None => to_json(&spec)?,
    };
    emit(a.out.as_deref(), &text)?;
    Ok(Outcome::Done)
}

fn env_inspect(a: EnvInspect) -> Result<Outcome> {
    let env = load_env(&a.env.env)?;
    let (lo, hi) = (a.window.from, a.window.to);
    let values = env.table(lo, hi)?;
    let rec = recurrence_report(&env, a.horizon)?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let summary = json!({
        "window": [lo, hi],
        "kappa": env.kappa(),
        "ellipticity": env.ellipticity(lo, hi)?,
        "period": env.period(),
        "mean_p": mean,
        "recurrence": rec,
    });
    if let Some(path) = &a.csv {
        let mut csv = Csv::new(&["j", "p"]);
        for (i, p) in values.iter().enumerate() {
            csv.row(&[(lo + i as i64).to_string(), p.to_string()]);
        }
        emit(Some(path), csv.as_str())?;
    }
    print_json(&summary)?;
    Ok(Outcome::Done)
}

fn potential(c: PotentialCmd) -> Result<Outcome> {
    match c {
        PotentialCmd::Table { env, window, out } => {
            let env = load_env(&env.env)?;
            let t = PotentialTable::build(&env, window.from, window.to)?;
            let p = env.table(window.from, window.to)?;
            let mut csv = Csv::new(&["k", "p", "sigma", "log_abs_m"]);
            for (i, k) in (window.from..=window.to).enumerate() {
                let (_, lm) = t.log_m(k)?;
                csv.row(&[k.to_string(), p[i].to_string(), t.sigma(k)?.to_string(), lm.to_string()]);
            }
            emit(out.as_deref(), csv.as_str())?;
        }
        PotentialCmd::Traps {
            env,
            window,
            threshold,
            out,
        } => {
            let env = load_env(&env.env)?;
            let traps = find_traps(&env, window.from, window.to, threshold)?;
            emit(out.as_deref(), &to_json(&traps)?)?;
        }
    }
    Ok(Outcome::Done)
}

fn criteria_check(a: CriteriaCheck) -> Result<Outcome> {
    let env = load_env(&a.env.env)?;
    let mut th: Thresholds = match &a.thresholds {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?).context("parsing thresholds")?,
        None => Thresholds::default(),
    };
    if let Some(l) = &a.l {
        th.l_candidates = parse_list(l)?;
    }
    if th.l_candidates.is_empty() {
        th.l_candidates = vec![2, 4, 8, 16, 32, 64];
    }
    if a.a.is_some() {
        th.a = a.a;
    }
    if a.q.is_some() {
        th.q = a.q;
    }
    let reference = a.reference.as_deref().map(load_env).transpose()?;
    let report = check_criterion(a.kind, &env, a.n, a.epsilon, &th, reference.as_ref())?;
    emit(a.out.as_deref(), &to_json(&report)?)?;
    Ok(Outcome::Verdict(report.holds))
}

fn window_or(arg: Option<&str>, start: i64, t: u64) -> Result<(i64, i64)> {
    match arg {
        Some(w) => parse_window(w),
        None => {
            let r = t as i64 + 1;
            Ok((start - r, start + r))
        }
    }
}

fn walk(c: WalkCmd) -> Result<Outcome> {
    match c {
        WalkCmd::Simulate {
            env,
            start,
            t,
            n_traj,
            seed,
            record,
            window,
            out,
        } => {
            let env = load_env(&env.env)?;
            let (a, b) = window_or(window.as_deref(), start, t)?;
            let table = SiteTable::from_env(&env, a, b)?;
            let record = match record {
                RecordArg::Endpoints => Record::Endpoints,
                RecordArg::MaxExcursion => Record::MaxExcursion,
            };
            let s = simulate(&table, start, t, n_traj, seed, record)?;
            let mut csv = Csv::new(&["z", "count"]);
            for (z, n) in s.histogram() {
                csv.row(&[z.to_string(), n.to_string()]);
            }
            emit(out.as_deref(), csv.as_str())?;
            let summary = json!({
                "t": t, "n_traj": n_traj, "seed": seed, "mean": s.mean, "variance": s.variance,
                "mean_max_excursion": s.mean_max_excursion, "largest_excursion": s.largest_excursion,
            });
            if out.is_some() {
                print_json(&summary)?;
            } else {
                eprint!("{}", to_json(&summary)?);
            }
        }
        WalkCmd::Exact {
            env,
            start,
            t,
            window,
            out,
        } => {
            let env = load_env(&env.env)?;
            let w = window.as_deref().map(parse_window).transpose()?;
            let d = evolve_exact(&env, start, t, w)?;
            let mut csv = Csv::new(&["z", "mass"]);
            for (z, m) in d.atoms() {
                csv.row(&[z.to_string(), m.to_string()]);
            }
            emit(out.as_deref(), csv.as_str())?;
            let m = moments(&d);
            let summary = json!({
                "t": t, "mean": m.mean, "variance": m.variance, "mass": m.mass,
                "leak_left": d.leak_left, "leak_right": d.leak_right,
            });
            if out.is_some() {
                print_json(&summary)?;
            } else {
                eprint!("{}", to_json(&summary)?);
            }
        }
        WalkCmd::Exit {
            env,
            a,
            b,
            start,
            mc,
            seed,
        } => {
            let env = load_env(&env.env)?;
            let st = exit_solve(&env, a, b, start)?;
            let mut v = json!({
                "a": a, "b": b, "start": start,
                "p_exit_right": st.p_exit_right, "mean_tau": st.m1, "var_tau": st.variance(),
                "m2": st.m2, "m3": st.m3, "tau_right": st.tau_right, "green_defect": st.green_defect,
            });
            if let Some(n_traj) = mc {
                let table = SiteTable::from_env(&env, a, b)?;
                let s = simulate_exit(&table, a, start, b, n_traj, seed, u64::MAX)?;
                v["monte_carlo"] = json!({
                    "n_traj": n_traj, "seed": seed, "right_fraction": s.right_fraction,
                    "mean_tau": s.mean_tau, "var_tau": s.var_tau,
                });
            }
            print_json(&v)?;
        }
    }
    Ok(Outcome::Done)
}

fn quasi_parts(env: &Environment) -> Result<(CircleMap, qpwalk::frequency::Frequency)> {
    match env.quasi_parts() {
        Some((map, freq, _, _)) => Ok((map.clone(), freq.clone())),
        None => bail!("this analysis needs a quasi-periodic environment"),
    }
}

fn analyze(c: AnalyzeCmd) -> Result<Outcome> {
    match c {
        AnalyzeCmd::Moments { env, start, t } => {
            let env = load_env(&env.env)?;
            let d = evolve_exact(&env, start, t, None)?;
            print_json(&moments(&d))?;
            Ok(Outcome::Done)
        }
        AnalyzeCmd::Clt {
            env,
            times,
            window_from,
            mu,
            sigma,
            epsilon,
        } => {
            let env = load_env(&env.env)?;
            let v = match (times, window_from) {
                (Some(ts), None) => clt_verdict(&env, &parse_list::<u64>(&ts)?, mu, sigma, epsilon)?,
                (None, Some(t)) => diophantine_verdict(&env, t, epsilon)?,
                _ => bail!("give exactly one of --times or --window-from"),
            };
            print_json(&v)?;
            Ok(Outcome::Verdict(v.pass))
        }
        AnalyzeCmd::DriftProfile {
            env,
            t,
            grid,
            tol,
            out,
        } => {
            let env = load_env(&env.env)?;
            let (map, freq) = quasi_parts(&env)?;
            let rows = analysis::drift_profile(&map, &freq, t, grid, tol)?;
            let mut csv = Csv::new(&["x", "u", "b_t", "terms"]);
            for r in &rows {
                csv.row(&[r.x.to_string(), r.u.to_string(), r.b_t.to_string(), r.terms.to_string()]);
            }
            emit(out.as_deref(), csv.as_str())?;
            Ok(Outcome::Done)
        }
        AnalyzeCmd::Stationary { env, grid, tol, out } => {
            let env = load_env(&env.env)?;
            let (map, freq) = quasi_parts(&env)?;
            let s = stationary_density(&map, &freq, grid, tol)?;
            let mut csv = Csv::new(&["x", "rho"]);
            for (x, r) in s.xs.iter().zip(&s.rho) {
                csv.row(&[x.to_string(), r.to_string()]);
            }
            emit(out.as_deref(), csv.as_str())?;
            let summary = json!({
                "eqim_residual": s.eqim_residual, "flux_defect": s.flux_defect,
                "reflected": s.reflected, "tol": s.tol,
            });
            if out.is_some() {
                print_json(&summary)?;
            } else {
                eprint!("{}", to_json(&summary)?);
            }
            Ok(Outcome::Done)
        }
    }
}

fn scenario_build(a: ScenarioBuild) -> Result<Outcome> {
    let kind: PlanKind = a.kind.parse()?;
    let alpha: FrequencySpec = a.alpha.parse()?;
    let base = match (&a.base, &a.cosine) {
        (Some(b), _) => parse_map(b)?,
        (None, Some(c)) => parse_cosine(c)?,
        (None, None) => match kind {
            PlanKind::C3 => CircleMap::cosine(0.5, 0.1, 1),
            PlanKind::Asymmetric => CircleMap::cosine(2.0 / 3.0, 0.05, 1),
        },
    };
    let plan = build_plan(kind, &alpha, a.n, a.s, &base, a.q_index)?;
    emit(a.out.as_deref(), &to_json(&plan)?)?;
    Ok(Outcome::Done)
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn scenario_run(a: ScenarioRun) -> Result<Outcome> {
    if let Some(path) = &a.manifest {
        return replay(path, &a.out);
    }
    let config = match (&a.config, &a.name) {
        (Some(p), _) => serde_json::from_str::<ScenarioConfig>(&std::fs::read_to_string(p)?)
            .with_context(|| format!("parsing {}", p.display()))?,
        (None, Some(name)) => ScenarioConfig::preset(name.parse::<ScenarioName>()?),
        (None, None) => unreachable!("clap requires --name, --config or --manifest"),
    };
    let config = config.with_overrides(&a.set)?;
    let (manifest, outcome) = scenario::run_scenario(&config, &a.out, &command_line())?;
    print_json(&json!({
        "scenario": config.name,
        "pass": outcome.pass,
        "checks": outcome.checks,
        "outputs": manifest.outputs,
    }))?;
    Ok(Outcome::Verdict(outcome.pass))
}

fn replay(path: &Path, out: &Path) -> Result<Outcome> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: RunManifest = serde_json::from_str(&text).context("parsing manifest")?;
    let (m, differing) = scenario::replay(&manifest, out)?;
    let identical = differing.is_empty();
    print_json(&json!({
        "scenario": m.config.name,
        "identical": identical,
        "differing": differing,
        "pass": m.pass,
    }))?;
    Ok(Outcome::Verdict(identical && m.pass))
}
