//! Rotation numbers as continued fractions with exact convergents.
//!
//! Convergents are indexed by strictly increasing denominators starting
//! from the integer nearest to `alpha` (so for `alpha = [0; 1, 1, ...]`
//! index 0 is `1/1` and index 1 is `1/2`). `eta[n]` is the signed
//! `q_n alpha - p_n`, evaluated exactly against the deepest stored
//! convergent.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BIT_BUDGET: u64 = 4096;
const NAMED_LENGTH: usize = 80;
const IRRATIONAL_TAIL: usize = 6;

/// How a [`Frequency`] was specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FrequencySpec {
    Golden,
    Silver,
    /// Explicit partial quotients `a1, a2, ...`, followed by `tail_ones`
    /// extra quotients equal to one.
    Quotients {
        quotients: Vec<String>,
        #[serde(default)]
        tail_ones: usize,
    },
    /// `a_{n+1}` chosen minimal so that `q_{n+1} >= q_n^{sigma(n)}`.
    Liouville { exponents: Vec<u32> },
}

impl FrequencySpec {
    pub fn quotients(qs: &[u64], tail_ones: usize) -> Self {
        FrequencySpec::Quotients {
            quotients: qs.iter().map(|q| q.to_string()).collect(),
            tail_ones,
        }
    }
}

impl FromStr for FrequencySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "golden" => return Ok(FrequencySpec::Golden),
            "silver" => return Ok(FrequencySpec::Silver),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("quotients:") {
            let quotients: Vec<String> = rest.split(',').map(|t| t.trim().to_string()).collect();
            for q in &quotients {
                BigUint::from_str(q).map_err(|_| Error::invalid(format!("bad quotient {q}")))?;
            }
            return Ok(FrequencySpec::Quotients {
                quotients,
                tail_ones: 0,
            });
        }
        if let Some(rest) = s.strip_prefix("liouville:") {
            let exponents = rest
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::invalid(format!("bad exponent {t}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(FrequencySpec::Liouville { exponents });
        }
        Err(Error::invalid(format!(
            "unknown frequency '{s}' (expected golden, silver, quotients:..., liouville:...)"
        )))
    }
}

impl fmt::Display for FrequencySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencySpec::Golden => write!(f, "golden"),
            FrequencySpec::Silver => write!(f, "silver"),
            FrequencySpec::Quotients { quotients, .. } => {
                write!(f, "quotients:{}", quotients.join(","))
            }
            FrequencySpec::Liouville { exponents } => {
                let v: Vec<String> = exponents.iter().map(|e| e.to_string()).collect();
                write!(f, "liouville:{}", v.join(","))
            }
        }
    }
}

/// Outcome of one Liouville inequality `|eta_n| < q_n^{-sigma}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiouvilleCheck {
    pub n: usize,
    pub sigma: u32,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct Frequency {
    spec: FrequencySpec,
    quotients: Vec<BigUint>,
    convergents: Vec<(BigInt, BigInt)>,
    eta: Vec<BigRational>,
    exact: bool,
    liouville: Vec<LiouvilleCheck>,
}

/// Exact rational point on the circle with its substitution error bound.
#[derive(Clone, Debug)]
pub struct OrbitPoint {
    pub point: BigRational,
    pub error_bound: BigRational,
}

fn big(n: u64) -> BigUint {
    BigUint::from(n)
}

fn standard_convergents(quotients: &[BigUint]) -> Vec<(BigInt, BigInt)> {
    let mut out = Vec::with_capacity(quotients.len() + 1);
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());
    out.push((p.clone(), q.clone()));
    for a in quotients {
        let a = BigInt::from(a.clone());
        let pn = &a * &p + &p_prev;
        let qn = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, pn);
        q_prev = std::mem::replace(&mut q, qn);
        out.push((p.clone(), q.clone()));
    }
    out
}

impl Frequency {
    pub fn build(spec: &FrequencySpec) -> Result<Self> {
        Self::build_with_budget(spec, DEFAULT_BIT_BUDGET)
    }

    pub fn build_with_budget(spec: &FrequencySpec, bit_budget: u64) -> Result<Self> {
        let mut liouville = Vec::new();
        let (quotients, exact) = match spec {
            FrequencySpec::Golden => (vec![big(1); NAMED_LENGTH], false),
            FrequencySpec::Silver => (vec![big(2); NAMED_LENGTH], false),
            FrequencySpec::Quotients {
                quotients,
                tail_ones,
            } => {
                let mut qs = Vec::with_capacity(quotients.len() + tail_ones);
                for q in quotients {
                    let v = BigUint::from_str(q)
                        .map_err(|_| Error::invalid(format!("bad quotient {q}")))?;
                    if v.is_zero() {
                        return Err(Error::invalid("partial quotients must be >= 1"));
                    }
                    qs.push(v);
                }
                if qs.is_empty() {
                    return Err(Error::invalid("no partial quotients"));
                }
                qs.extend(std::iter::repeat(big(1)).take(*tail_ones));
                (qs, *tail_ones == 0)
            }
            FrequencySpec::Liouville { exponents } => {
                if exponents.iter().any(|&s| s < 1) {
                    return Err(Error::invalid("schedule exponents must be >= 1"));
                }
                let mut qs = vec![big(2)];
                let (mut q_prev, mut q) = (big(1), big(2));
                for &sigma in exponents {
                    let target: BigUint = Pow::pow(&q, sigma);
                    let a = if target <= q_prev {
                        big(1)
                    } else {
                        let need = &target - &q_prev;
                        let (d, r) = need.div_rem(&q);
                        let a = if r.is_zero() { d } else { d + 1u32 };
                        a.max(big(1))
                    };
                    let q_next = &a * &q + &q_prev;
                    if q_next.bits() > bit_budget {
                        return Err(Error::BitBudget(bit_budget));
                    }
                    qs.push(a);
                    q_prev = std::mem::replace(&mut q, q_next);
                }
                qs.extend(std::iter::repeat(big(1)).take(IRRATIONAL_TAIL));
                (qs, false)
            }
        };
        let mut convergents = standard_convergents(&quotients);
        if convergents.len() >= 2 && convergents[1].1 == convergents[0].1 {
            convergents.remove(0);
        }
        if let Some((_, q)) = convergents.last() {
            if q.bits() > bit_budget {
                return Err(Error::BitBudget(bit_budget));
            }
        }
        let (pm, qm) = convergents.last().cloned().unwrap();
        let alpha = BigRational::new(pm, qm);
        let eta = convergents
            .iter()
            .map(|(p, q)| BigRational::from_integer(q.clone()) * &alpha - BigRational::from_integer(p.clone()))
            .collect();
        let mut f = Frequency {
            spec: spec.clone(),
            quotients,
            convergents,
            eta,
            exact,
            liouville: Vec::new(),
        };
        if let FrequencySpec::Liouville { exponents } = spec {
            for (i, &sigma) in exponents.iter().enumerate() {
                let n = i + 1;
                let q = BigRational::from_integer(f.convergents[n].1.clone());
                let lhs = f.eta[n].abs() * Pow::pow(&q, sigma);
                liouville.push(LiouvilleCheck {
                    n,
                    sigma,
                    holds: lhs < BigRational::one(),
                });
            }
            f.liouville = liouville;
        }
        Ok(f)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::build(&s.parse()?)
    }

    pub fn spec(&self) -> &FrequencySpec {
        &self.spec
    }

    pub fn partial_quotients(&self) -> &[BigUint] {
        &self.quotients
    }

    pub fn liouville_checks(&self) -> &[LiouvilleCheck] {
        &self.liouville
    }

    /// Whether alpha is the rational given by the quotient list itself.
    pub fn is_exact_rational(&self) -> bool {
        self.exact
    }

    /// Largest index whose convergent and eta are certified.
    pub fn depth(&self) -> usize {
        let last = self.convergents.len() - 1;
        if self.exact {
            last
        } else {
            last.saturating_sub(4)
        }
    }

    fn check_depth(&self, n: usize) -> Result<()> {
        if n > self.depth() {
            return Err(Error::Depth {
                requested: n,
                available: self.depth(),
            });
        }
        Ok(())
    }

    /// `(p_n, q_n, |eta_n|)`.
    pub fn convergent(&self, n: usize) -> Result<(BigInt, BigInt, BigRational)> {
        self.check_depth(n)?;
        let (p, q) = self.convergents[n].clone();
        Ok((p, q, self.eta[n].abs()))
    }

    /// Signed `q_n alpha - p_n`.
    pub fn eta_signed(&self, n: usize) -> Result<BigRational> {
        self.check_depth(n)?;
        Ok(self.eta[n].clone())
    }

    pub fn q(&self, n: usize) -> Result<BigInt> {
        self.check_depth(n)?;
        Ok(self.convergents[n].1.clone())
    }

    pub fn q_u64(&self, n: usize) -> Result<u64> {
        self.q(n)?
            .to_u64()
            .ok_or_else(|| Error::invalid("denominator does not fit in 64 bits"))
    }

    pub fn eta_f64(&self, n: usize) -> Result<f64> {
        Ok(self.eta_signed(n)?.to_f64().unwrap_or(0.0))
    }

    /// The deepest stored convergent as a rational.
    pub fn alpha_rational(&self) -> BigRational {
        let (p, q) = self.convergents.last().unwrap();
        BigRational::new(p.clone(), q.clone())
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_rational().to_f64().unwrap()
    }

    /// Surrogate `p_n / q_n` as an f64, used as the rotation angle for
    /// circle-level computations.
    pub fn surrogate_f64(&self, n: usize) -> Result<f64> {
        self.check_depth(n)?;
        let (p, q) = &self.convergents[n];
        Ok(BigRational::new(p.clone(), q.clone()).to_f64().unwrap())
    }

    /// Smallest certified index whose denominator exceeds `bound`.
    pub fn depth_exceeding(&self, bound: u64) -> Result<usize> {
        let b = BigInt::from(bound);
        (0..=self.depth())
            .find(|&n| self.convergents[n].1 > b)
            .ok_or_else(|| Error::invalid(format!("no certified denominator exceeds {bound}")))
    }

    /// `x + j p_depth / q_depth mod 1` and the bound `|j| |eta_depth|`.
    pub fn orbit_point(&self, x: &BigRational, j: i64, depth: usize) -> Result<OrbitPoint> {
        self.check_depth(depth)?;
        let (p, q) = &self.convergents[depth];
        let step = BigRational::new(p.clone() * BigInt::from(j), q.clone());
        let v = x + step;
        let point = &v - v.floor();
        let error_bound = self.eta[depth].abs() * BigRational::from_integer(BigInt::from(j.unsigned_abs()));
        Ok(OrbitPoint { point, error_bound })
    }

    /// As [`Frequency::orbit_point`], failing when the substitution error is
    /// not below `tolerance`.
    pub fn orbit_point_checked(
        &self,
        x: &BigRational,
        j: i64,
        depth: usize,
        tolerance: f64,
    ) -> Result<OrbitPoint> {
        let op = self.orbit_point(x, j, depth)?;
        let bound = op.error_bound.to_f64().unwrap_or(f64::INFINITY);
        if bound >= tolerance {
            return Err(Error::Precision { bound, tolerance });
        }
        Ok(op)
    }

    /// `1/(q_n + q_{n+1}) < |eta_n| < 1/q_{n+1}` for every certified index
    /// that has a certified successor.
    pub fn check_eta_bounds(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        let last = if self.exact {
            self.convergents.len().saturating_sub(3)
        } else {
            self.depth()
        };
        for n in 0..last {
            let q0 = BigRational::from_integer(self.convergents[n].1.clone());
            let q1 = BigRational::from_integer(self.convergents[n + 1].1.clone());
            let e = self.eta[n].abs();
            let upper = &e * &q1 < BigRational::one();
            let lower = &e * (&q0 + &q1) > BigRational::one();
            out.push((n, upper && lower));
        }
        out
    }
}

/// Parses `"a/b"` or an integer or a terminating decimal into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a = BigInt::from_str(a.trim()).map_err(|_| Error::invalid(format!("bad rational {s}")))?;
        let b = BigInt::from_str(b.trim()).map_err(|_| Error::invalid(format!("bad rational {s}")))?;
        if b.is_zero() {
            return Err(Error::invalid("zero denominator"));
        }
        return Ok(BigRational::new(a, b));
    }
    if let Some((int, dec)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches('-'), dec);
        let num = BigInt::from_str(&digits).map_err(|_| Error::invalid(format!("bad rational {s}")))?;
        let den = Pow::pow(&BigInt::from(10u32), dec.len() as u32);
        let r = BigRational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    let a = BigInt::from_str(s).map_err(|_| Error::invalid(format!("bad rational {s}")))?;
    Ok(BigRational::from_integer(a))
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pq(f: &Frequency, n: usize) -> (i64, i64) {
        let (p, q, _) = f.convergent(n).unwrap();
        (p.to_i64().unwrap(), q.to_i64().unwrap())
    }

    #[test]
    fn golden_convergents_are_fibonacci_ratios() {
        let f = Frequency::build(&FrequencySpec::Golden).unwrap();
        assert_eq!(pq(&f, 0), (1, 1));
        let expected = [(1, 2), (2, 3), (3, 5), (5, 8), (8, 13)];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(pq(&f, i + 1), *e);
        }
    }

    #[test]
    fn silver_denominators() {
        let f = Frequency::build(&FrequencySpec::Silver).unwrap();
        let qs: Vec<i64> = (1..=4).map(|n| pq(&f, n).1).collect();
        assert_eq!(qs, vec![2, 5, 12, 29]);
        assert_eq!(pq(&f, 0), (0, 1));
    }

    #[test]
    fn spec_round_trips_through_strings() {
        for s in ["golden", "silver", "quotients:2,1,3", "liouville:2,3,4"] {
            let spec: FrequencySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("bogus".parse::<FrequencySpec>().is_err());
    }

    #[test]
    fn exact_quotient_list_is_rational() {
        let f = Frequency::parse("quotients:2,3").unwrap();
        // [0; 2, 3] = 3/7
        assert_eq!(f.alpha_rational(), BigRational::new(3.into(), 7.into()));
        assert!(f.is_exact_rational());
    }

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational("1/4").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-3").unwrap(), BigRational::from_integer((-3).into()));
    }

    #[test]
    fn bit_budget_is_enforced() {
        let spec = FrequencySpec::Liouville {
            exponents: vec![4, 5, 6, 7, 8],
        };
        assert!(matches!(
            Frequency::build_with_budget(&spec, 64),
            Err(Error::BitBudget(64))
        ));
    }
}
