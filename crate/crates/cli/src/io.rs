use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qpwalk::circlemap::CircleMap;
use qpwalk::environment::{EnvSpec, Environment};
use serde::Serialize;
use serde_json::Value;

/// Reads an environment from an `EnvSpec` file or from any JSON object
/// carrying one under an `"env"` or `"spec"` key (scenario plans, generic envs).
pub fn load_env(path: &Path) -> Result<Environment> {
    let spec = load_env_spec(path)?;
    Ok(Environment::build(&spec)?)
}

pub fn load_env_spec(path: &Path) -> Result<EnvSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    env_spec_from_value(value).with_context(|| format!("no environment in {}", path.display()))
}

pub fn env_spec_from_value(value: Value) -> Result<EnvSpec> {
    if value.get("kind").is_some() || value.get("rule").is_some() {
        if let Ok(spec) = serde_json::from_value::<EnvSpec>(value.clone()) {
            return Ok(spec);
        }
    }
    match value.get("env").or_else(|| value.get("spec")) {
        Some(inner) => Ok(serde_json::from_value(inner.clone())?),
        None => Ok(serde_json::from_value(value)?),
    }
}

/// A circle map given inline as JSON or as `@path`.
pub fn parse_map(arg: &str) -> Result<CircleMap> {
    let text = match arg.strip_prefix('@') {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {p}"))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).context("parsing circle map")
}

/// `c,a,k` as `c + a cos(2π k x)`.
pub fn parse_cosine(arg: &str) -> Result<CircleMap> {
    let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("--cosine expects c,a,k");
    }
    Ok(CircleMap::cosine(parts[0].parse()?, parts[1].parse()?, parts[2].parse()?))
}

pub fn parse_list<T: std::str::FromStr>(arg: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    arg.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().with_context(|| format!("bad list entry '{s}'")))
        .collect()
}

pub fn parse_window(arg: &str) -> Result<(i64, i64)> {
    let v: Vec<i64> = parse_list(arg)?;
    match v.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        _ => bail!("window must be a,b with a < b"),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to `out`, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes())?;
            o.flush()?;
        }
    }
    Ok(())
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(None, &to_json(value)?)
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}
