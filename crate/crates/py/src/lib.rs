use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use serde::Serialize;

use qpwalk::analysis;
use qpwalk::engine::{self, Record, SiteTable};
use qpwalk::environment::{self as envmod, EnvSpec, ProceduralRule};
use qpwalk::frequency::{self, FrequencySpec};
use qpwalk::potential::{self, CriterionKind, Thresholds};
use qpwalk::scenario::{self, ScenarioConfig, ScenarioName};

create_exception!(qpwalk_py, QpwalkError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    QpwalkError::new_err(e.to_string())
}

/// Converts any serializable value into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A one-dimensional environment of right-step probabilities.
#[pyclass(module = "qpwalk_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Environment {
    inner: envmod::Environment,
}

fn build(spec: EnvSpec) -> PyResult<Environment> {
    Ok(Environment {
        inner: envmod::Environment::build(&spec).map_err(err)?,
    })
}

#[pymethods]
impl Environment {
    #[staticmethod]
    fn constant(p: f64) -> PyResult<Self> {
        build(EnvSpec::Periodic { values: vec![p] })
    }

    #[staticmethod]
    fn periodic(values: Vec<f64>) -> PyResult<Self> {
        build(EnvSpec::Periodic { values })
    }

    #[staticmethod]
    fn tabulated(first: i64, values: Vec<f64>) -> PyResult<Self> {
        Ok(Environment {
            inner: envmod::Environment::tabulated(first, values).map_err(err)?,
        })
    }

    /// 1/3 beyond +k, 2/3 beyond -k, fair in between.
    #[staticmethod]
    fn trap(k: i64) -> PyResult<Self> {
        build(EnvSpec::Procedural(ProceduralRule::Trap { k }))
    }

    /// `map_json` is a serialized circle map; `alpha` uses the CLI syntax
    /// (`golden`, `quotients:1,2,3`, `liouville:2,3`).
    #[staticmethod]
    #[pyo3(signature = (map_json, alpha = "golden", phase = "0", depth = None))]
    fn quasiperiodic(map_json: &str, alpha: &str, phase: &str, depth: Option<usize>) -> PyResult<Self> {
        build(EnvSpec::Quasiperiodic {
            map: serde_json::from_str(map_json).map_err(err)?,
            alpha: alpha.parse().map_err(err)?,
            phase: phase.to_string(),
            depth,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        build(serde_json::from_str(text).map_err(err)?)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(self.inner.spec()).map_err(err)
    }

    fn p(&self, j: i64) -> PyResult<f64> {
        self.inner.p(j).map_err(err)
    }

    fn table(&self, a: i64, b: i64) -> PyResult<Vec<f64>> {
        self.inner.table(a, b).map_err(err)
    }

    fn reflected(&self) -> Self {
        Environment {
            inner: self.inner.reflected(),
        }
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn period(&self) -> Option<u64> {
        self.inner.period()
    }

    fn __repr__(&self) -> String {
        format!("Environment(kappa={}, period={:?})", self.inner.kappa(), self.inner.period())
    }
}

/// Continued-fraction data of a rotation number.
#[pyclass(module = "qpwalk_py", frozen)]
struct Frequency {
    inner: frequency::Frequency,
}

#[pymethods]
impl Frequency {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec: FrequencySpec = spec.parse().map_err(err)?;
        Ok(Frequency {
            inner: frequency::Frequency::build(&spec).map_err(err)?,
        })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha_f64()
    }

    /// `(p_n, q_n)` as decimal strings, since they outgrow 64 bits.
    fn convergent(&self, n: usize) -> PyResult<(String, String)> {
        let (p, q, _) = self.inner.convergent(n).map_err(err)?;
        Ok((p.to_string(), q.to_string()))
    }

    /// Signed error `q_n alpha - p_n`.
    fn eta(&self, n: usize) -> PyResult<f64> {
        self.inner.eta_f64(n).map_err(err)
    }
}

/// Probability of reaching `b` before `a` from `start`; `None` means infinity.
#[pyfunction]
#[pyo3(signature = (env, start, a = None, b = None))]
fn hit_prob(env: &Environment, start: i64, a: Option<i64>, b: Option<i64>) -> PyResult<f64> {
    potential::hit_prob(&env.inner, a, start, b).map_err(err)
}

#[pyfunction]
fn sigma_range(env: &Environment, lo: i64, hi: i64) -> PyResult<Vec<f64>> {
    potential::sigma_range(&env.inner, lo, hi).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (env, a, b, threshold = 1.0))]
fn find_traps<'py>(py: Python<'py>, env: &Environment, a: i64, b: i64, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &potential::find_traps(&env.inner, a, b, threshold).map_err(err)?)
}

/// Exit probability, time moments and occupations for the interval `(a, b)`.
#[pyfunction]
fn exit_solve<'py>(py: Python<'py>, env: &Environment, a: i64, b: i64, start: i64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &engine::exit_solve(&env.inner, a, b, start).map_err(err)?)
}

/// Exact law of `Z_t` as `(sites, masses)`.
#[pyfunction]
#[pyo3(signature = (env, start, t, window = None))]
fn evolve_exact(
    py: Python<'_>,
    env: &Environment,
    start: i64,
    t: u64,
    window: Option<(i64, i64)>,
) -> PyResult<(Vec<i64>, Vec<f64>)> {
    let inner = env.inner.clone();
    let d = py
        .detach(move || engine::evolve_exact(&inner, start, t, window))
        .map_err(err)?;
    Ok(d.atoms().into_iter().unzip())
}

/// Endpoints of `n_traj` independent walks of `t` steps.
#[pyfunction]
#[pyo3(signature = (env, start, t, n_traj, seed = 0))]
fn simulate(py: Python<'_>, env: &Environment, start: i64, t: u64, n_traj: usize, seed: u64) -> PyResult<Vec<i64>> {
    let r = t as i64 + 1;
    let table = SiteTable::from_env(&env.inner, start - r, start + r).map_err(err)?;
    let s = py
        .detach(move || engine::simulate(&table, start, t, n_traj, seed, Record::Endpoints))
        .map_err(err)?;
    Ok(s.endpoints)
}

/// Report for condition `kind` (`c1`, `c2`, `c3`) at scale `n`.
#[pyfunction]
#[pyo3(signature = (kind, env, n, epsilon = 0.05, thresholds_json = None, reference = None))]
fn check_criterion<'py>(
    py: Python<'py>,
    kind: &str,
    env: &Environment,
    n: i64,
    epsilon: f64,
    thresholds_json: Option<&str>,
    reference: Option<&Environment>,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: CriterionKind = kind.parse().map_err(err)?;
    let mut th: Thresholds = match thresholds_json {
        Some(t) => serde_json::from_str(t).map_err(err)?,
        None => Thresholds::default(),
    };
    if th.l_candidates.is_empty() {
        th.l_candidates = vec![2, 4, 8, 16, 32, 64];
    }
    let r = potential::check_criterion(kind, &env.inner, n, epsilon, &th, reference.map(|e| &e.inner)).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn ks_phi(samples: Vec<f64>, mu: f64, sigma: f64) -> PyResult<f64> {
    analysis::ks_phi_samples(&samples, mu, sigma).map_err(err)
}

/// Runs a named preset into `out_dir`; returns the manifest and verdict.
#[pyfunction]
#[pyo3(signature = (name, out_dir, overrides = Vec::new()))]
fn run_scenario<'py>(py: Python<'py>, name: &str, out_dir: &str, overrides: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
    let name: ScenarioName = name.parse().map_err(err)?;
    let config = ScenarioConfig::preset(name).with_overrides(&overrides).map_err(err)?;
    let dir = std::path::PathBuf::from(out_dir);
    let (manifest, outcome) = py
        .detach(move || scenario::run_scenario(&config, &dir, "python"))
        .map_err(err)?;
    to_py(py, &serde_json::json!({ "manifest": manifest, "outcome": outcome }))
}

#[pymodule]
pub fn qpwalk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("QpwalkError", m.py().get_type::<QpwalkError>())?;
    m.add_class::<Environment>()?;
    m.add_class::<Frequency>()?;
    m.add_function(wrap_pyfunction!(hit_prob, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_range, m)?)?;
    m.add_function(wrap_pyfunction!(find_traps, m)?)?;
    m.add_function(wrap_pyfunction!(exit_solve, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_exact, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(check_criterion, m)?)?;
    m.add_function(wrap_pyfunction!(ks_phi, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
