//! Lattice environments `p: Z -> [kappa, 1 - kappa]`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circlemap::CircleMap;
use crate::error::{Error, Result};
use crate::frequency::{format_rational, parse_rational, Frequency, FrequencySpec};

/// Upper bound on the number of sites materialised by [`Environment::table`].
pub const MAX_TABLE_SITES: u64 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    ConstantExtend,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ProceduralRule {
    /// `1/3` for `n > k`, `2/3` for `n < -k`, `1/2` in between.
    Trap { k: i64 },
    /// `core[i]` at site `first + i`, `left` below and `right` above.
    Layered {
        first: i64,
        core: Vec<f64>,
        left: f64,
        right: f64,
    },
}

/// Serializable description of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Quasiperiodic {
        map: CircleMap,
        alpha: FrequencySpec,
        /// Phase `x` as `"a/b"`.
        phase: String,
        /// Convergent index of the rational surrogate; defaults to the
        /// deepest certified one.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        depth: Option<usize>,
    },
    Periodic {
        values: Vec<f64>,
    },
    Tabulated {
        first: i64,
        values: Vec<f64>,
        #[serde(default)]
        boundary: Boundary,
    },
    Procedural(ProceduralRule),
    /// `p'(j) = 1 - p(-j)`.
    Reflected {
        inner: Box<EnvSpec>,
    },
}

/// Periodic pattern continuing outward from `start`: on the right
/// `p(start + i) = pattern[i mod L]`, on the left `p(start - i) = pattern[i mod L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tail {
    pub start: i64,
    pub pattern: Vec<f64>,
}

#[derive(Debug)]
struct QuasiData {
    map: CircleMap,
    freq: Frequency,
    x: BigRational,
    depth: usize,
    p_d: BigInt,
    q_d: BigInt,
    small: Option<(i128, i128, i128, i128)>,
}

#[derive(Debug)]
enum Kind {
    Quasi(Box<QuasiData>),
    Periodic(Vec<f64>),
    Tabulated {
        first: i64,
        values: Vec<f64>,
        boundary: Boundary,
    },
    Layered {
        first: i64,
        core: Vec<f64>,
        left: f64,
        right: f64,
    },
    Reflected(Box<Environment>),
}

/// A built, immutable environment. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Environment {
    spec: EnvSpec,
    inner: Arc<Kind>,
    kappa: f64,
}

fn check_prob(site: impl Fn() -> String, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Ellipticity {
            site: site(),
            value: v,
        });
    }
    Ok(())
}

fn min_margin(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&p| p.min(1.0 - p))
        .fold(f64::INFINITY, f64::min)
}

impl Environment {
    pub fn build(spec: &EnvSpec) -> Result<Self> {
        let (kind, kappa) = match spec {
            EnvSpec::Periodic { values } => {
                if values.is_empty() {
                    return Err(Error::invalid("empty period"));
                }
                for (i, &v) in values.iter().enumerate() {
                    check_prob(|| i.to_string(), v)?;
                }
                (Kind::Periodic(values.clone()), min_margin(values))
            }
            EnvSpec::Tabulated {
                first,
                values,
                boundary,
            } => {
                if values.is_empty() {
                    return Err(Error::invalid("empty window"));
                }
                for (i, &v) in values.iter().enumerate() {
                    check_prob(|| (first + i as i64).to_string(), v)?;
                }
                (
                    Kind::Tabulated {
                        first: *first,
                        values: values.clone(),
                        boundary: *boundary,
                    },
                    min_margin(values),
                )
            }
            EnvSpec::Procedural(rule) => {
                let (first, core, left, right) = match rule {
                    ProceduralRule::Trap { k } => {
                        if *k < 0 {
                            return Err(Error::invalid("trap width must be >= 0"));
                        }
                        (-k, vec![0.5; (2 * k + 1) as usize], 2.0 / 3.0, 1.0 / 3.0)
                    }
                    ProceduralRule::Layered {
                        first,
                        core,
                        left,
                        right,
                    } => (*first, core.clone(), *left, *right),
                };
                for (i, &v) in core.iter().enumerate() {
                    check_prob(|| (first + i as i64).to_string(), v)?;
                }
                check_prob(|| "left tail".into(), left)?;
                check_prob(|| "right tail".into(), right)?;
                let kappa = min_margin(&core).min(min_margin(&[left, right]));
                (
                    Kind::Layered {
                        first,
                        core,
                        left,
                        right,
                    },
                    kappa,
                )
            }
            EnvSpec::Quasiperiodic {
                map,
                alpha,
                phase,
                depth,
            } => {
                let freq = Frequency::build(alpha)?;
                let depth = depth.unwrap_or_else(|| freq.depth());
                let (p_d, q_d, _) = freq.convergent(depth)?;
                let x = parse_rational(phase)?;
                let x = &x - x.floor();
                let small = small_orbit(&x, &p_d, &q_d);
                let data = QuasiData {
                    map: map.clone(),
                    freq,
                    x,
                    depth,
                    p_d,
                    q_d,
                    small,
                };
                let kappa = quasi_kappa(&data)?;
                (Kind::Quasi(Box::new(data)), kappa)
            }
            EnvSpec::Reflected { inner } => {
                let env = Environment::build(inner)?;
                let kappa = env.kappa;
                (Kind::Reflected(Box::new(env)), kappa)
            }
        };
        Ok(Environment {
            spec: spec.clone(),
            inner: Arc::new(kind),
            kappa,
        })
    }

    pub fn periodic(values: Vec<f64>) -> Result<Self> {
        Self::build(&EnvSpec::Periodic { values })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::periodic(vec![p])
    }

    pub fn tabulated(first: i64, values: Vec<f64>) -> Result<Self> {
        Self::build(&EnvSpec::Tabulated {
            first,
            values,
            boundary: Boundary::ConstantExtend,
        })
    }

    pub fn quasiperiodic(map: CircleMap, alpha: FrequencySpec, phase: &BigRational, depth: Option<usize>) -> Result<Self> {
        Self::build(&EnvSpec::Quasiperiodic {
            map,
            alpha,
            phase: format_rational(phase),
            depth,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Certified ellipticity over the declared window or period (for
    /// quasi-periodic environments with very long surrogate periods, the
    /// minimum over a dense circle grid).
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn reflected(&self) -> Environment {
        Environment {
            spec: EnvSpec::Reflected {
                inner: Box::new(self.spec.clone()),
            },
            inner: Arc::new(Kind::Reflected(Box::new(self.clone()))),
            kappa: self.kappa,
        }
    }

    /// Right-step probability at site `j`.
    pub fn p(&self, j: i64) -> Result<f64> {
        match &*self.inner {
            Kind::Periodic(v) => Ok(v[j.rem_euclid(v.len() as i64) as usize]),
            Kind::Tabulated {
                first,
                values,
                boundary,
            } => {
                let i = j - first;
                if i >= 0 && (i as usize) < values.len() {
                    Ok(values[i as usize])
                } else if *boundary == Boundary::Reject {
                    Err(Error::OutsideWindow(j))
                } else if i < 0 {
                    Ok(values[0])
                } else {
                    Ok(*values.last().unwrap())
                }
            }
            Kind::Layered {
                first,
                core,
                left,
                right,
            } => {
                let i = j - first;
                if i < 0 {
                    Ok(*left)
                } else if (i as usize) < core.len() {
                    Ok(core[i as usize])
                } else {
                    Ok(*right)
                }
            }
            Kind::Quasi(d) => Ok(d.map.eval(d.orbit_f64(j))),
            Kind::Reflected(inner) => Ok(1.0 - inner.p(-j)?),
        }
    }

    /// `p(j)` for `j` in `[a, b]`.
    pub fn table(&self, a: i64, b: i64) -> Result<Vec<f64>> {
        if b < a {
            return Ok(Vec::new());
        }
        let n = (b - a + 1) as u64;
        if n > MAX_TABLE_SITES {
            return Err(Error::Memory(n));
        }
        if let Kind::Quasi(d) = &*self.inner {
            return Ok((a..=b)
                .into_par_iter()
                .map(|j| d.map.eval(d.orbit_f64(j)))
                .collect());
        }
        (a..=b).map(|j| self.p(j)).collect()
    }

    /// Smallest value of `min(p, 1 - p)` over `[a, b]`.
    pub fn ellipticity(&self, a: i64, b: i64) -> Result<f64> {
        Ok(min_margin(&self.table(a, b)?))
    }

    /// Exact lattice period, when there is one.
    pub fn period(&self) -> Option<u64> {
        match &*self.inner {
            Kind::Periodic(v) => Some(v.len() as u64),
            Kind::Quasi(d) => d.q_d.to_u64(),
            Kind::Reflected(inner) => inner.period(),
            _ => None,
        }
    }

    /// Fails when a quasi-periodic surrogate period does not exceed the
    /// span of `[a, b]`.
    pub fn check_window(&self, a: i64, b: i64) -> Result<()> {
        if let Kind::Quasi(d) = &*self.inner {
            let span = BigInt::from(b - a);
            if d.q_d <= span {
                return Err(Error::invalid(format!(
                    "surrogate period {} does not exceed the window span {}; deepen the convergent",
                    d.q_d,
                    b - a
                )));
            }
        }
        if let Kind::Reflected(inner) = &*self.inner {
            return inner.check_window(-b, -a);
        }
        Ok(())
    }

    /// Quasi-periodic data: the circle map, the frequency, the phase and the
    /// surrogate depth.
    pub fn quasi_parts(&self) -> Option<(&CircleMap, &Frequency, &BigRational, usize)> {
        match &*self.inner {
            Kind::Quasi(d) => Some((&d.map, &d.freq, &d.x, d.depth)),
            _ => None,
        }
    }

    /// Exact orbit point `x + j p_D/q_D mod 1` for quasi-periodic kinds.
    pub fn orbit_point(&self, j: i64) -> Option<BigRational> {
        match &*self.inner {
            Kind::Quasi(d) => Some(d.orbit_exact(j)),
            _ => None,
        }
    }

    /// Eventually-periodic tails `(left, right)` when the kind has them.
    pub fn tails(&self) -> (Option<Tail>, Option<Tail>) {
        match &*self.inner {
            Kind::Periodic(v) => {
                let l = v.len() as i64;
                let left: Vec<f64> = (0..l).map(|i| v[(-i).rem_euclid(l) as usize]).collect();
                (
                    Some(Tail {
                        start: 0,
                        pattern: left,
                    }),
                    Some(Tail {
                        start: 0,
                        pattern: v.clone(),
                    }),
                )
            }
            Kind::Tabulated {
                first,
                values,
                boundary: Boundary::ConstantExtend,
            } => (
                Some(Tail {
                    start: *first,
                    pattern: vec![values[0]],
                }),
                Some(Tail {
                    start: first + values.len() as i64 - 1,
                    pattern: vec![*values.last().unwrap()],
                }),
            ),
            Kind::Tabulated { .. } => (None, None),
            Kind::Layered {
                first,
                core,
                left,
                right,
            } => (
                Some(Tail {
                    start: first - 1,
                    pattern: vec![*left],
                }),
                Some(Tail {
                    start: first + core.len() as i64,
                    pattern: vec![*right],
                }),
            ),
            Kind::Quasi(d) => match d.q_d.to_u64() {
                Some(q) if q <= 1 << 22 => {
                    let q = q as i64;
                    let right: Vec<f64> = (0..q).map(|i| d.map.eval(d.orbit_f64(i))).collect();
                    let left: Vec<f64> = (0..q).map(|i| d.map.eval(d.orbit_f64(-i))).collect();
                    (
                        Some(Tail {
                            start: 0,
                            pattern: left,
                        }),
                        Some(Tail {
                            start: 0,
                            pattern: right,
                        }),
                    )
                }
                _ => (None, None),
            },
            Kind::Reflected(inner) => {
                let (l, r) = inner.tails();
                let flip = |t: Tail| Tail {
                    start: -t.start,
                    pattern: t.pattern.iter().map(|p| 1.0 - p).collect(),
                };
                (r.map(flip), l.map(flip))
            }
        }
    }
}

fn small_orbit(x: &BigRational, p: &BigInt, q: &BigInt) -> Option<(i128, i128, i128, i128)> {
    let xn = x.numer().to_i128()?;
    let xd = x.denom().to_i128()?;
    let p = p.to_i128()?;
    let q = q.to_i128()?;
    let m = xd.checked_mul(q)?;
    if m > (1i128 << 62) || p.abs() > (1i128 << 62) {
        return None;
    }
    Some((xn, xd, p, q))
}

impl QuasiData {
    fn orbit_exact(&self, j: i64) -> BigRational {
        let step = BigRational::new(&self.p_d * BigInt::from(j), self.q_d.clone());
        let v = &self.x + step;
        &v - v.floor()
    }

    fn orbit_f64(&self, j: i64) -> f64 {
        if let Some((xn, xd, p, q)) = self.small {
            let m = xd * q;
            // (xn q + j p xd) mod (xd q); p mod q and j mod q keep it small.
            let jr = (j as i128).rem_euclid(q);
            let num = (xn * q).rem_euclid(m) + ((jr * p).rem_euclid(q)) * xd;
            let num = num.rem_euclid(m);
            let g = num.gcd(&m);
            return (num / g) as f64 / (m / g) as f64;
        }
        let r = self.orbit_exact(j);
        r.to_f64().unwrap_or(0.0)
    }
}

fn quasi_kappa(d: &QuasiData) -> Result<f64> {
    let q = d.q_d.to_u64().unwrap_or(u64::MAX);
    let values: Vec<f64> = if q <= 1 << 20 {
        (0..q as i64).into_par_iter().map(|j| d.map.eval(d.orbit_f64(j))).collect()
    } else {
        let n = 1 << 16;
        let mut v: Vec<f64> = (0..n).map(|i| d.map.eval(i as f64 / n as f64)).collect();
        v.extend(d.map.breakpoints().into_iter().map(|b| d.map.eval(b)));
        v.extend((-512..=512).map(|j| d.map.eval(d.orbit_f64(j))));
        v
    };
    for (i, &v) in values.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Ellipticity {
                site: format!("sample {i}"),
                value: v,
            });
        }
    }
    if d.x.is_zero() && values.is_empty() {
        return Err(Error::invalid("empty environment"));
    }
    Ok(min_margin(&values))
}

/// `∫ ln p - ∫ ln (1 - p)`; zero for symmetric walks.
pub fn symmetry_defect(p: &CircleMap) -> Result<f64> {
    let bad = std::sync::atomic::AtomicBool::new(false);
    let v = p.integrate_with(
        |v| {
            if !(v > 0.0 && v < 1.0) {
                bad.store(true, std::sync::atomic::Ordering::Relaxed);
                0.0
            } else {
                v.ln() - (1.0 - v).ln()
            }
        },
        crate::circlemap::QUAD_TOL,
    )?;
    if bad.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(Error::Ellipticity {
            site: "circle".into(),
            value: f64::NAN,
        });
    }
    Ok(v)
}
