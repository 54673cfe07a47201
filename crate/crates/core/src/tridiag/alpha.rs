//! Cross-gain values with exact zero tests for the determinant family.
//!
//! The case split of the symmetric multiplexing-gain formula is
//! discontinuous in `α`, so zero tests of `u_q(α)` must be exact whenever
//! possible. Decimal literals are kept as exact rationals, and critical
//! values are kept symbolically as "the k-th positive root of `u_p`", with
//! zero tests decided by polynomial gcds and Sturm counts on an isolating
//! interval.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::poly::{count_roots, det_poly, Poly};
use super::{det_h, det_h_exact, isolated_roots, ZERO_TOL};
use crate::error::{Error, Result};

/// A nonzero cross-gain value.
#[derive(Clone, Debug, PartialEq)]
pub enum Alpha {
    /// An exact rational, typically parsed from a decimal literal.
    Rational(BigRational),
    /// The `k`-th positive root of `u_p` (ascending), possibly negated.
    Critical { p: usize, k: usize, negative: bool },
    /// A floating-point value; zero tests use the absolute tolerance.
    Float(f64),
}

/// Cached zero tests keyed by `(p, k, q)`: is the k-th positive root of `u_p` a root of `u_q`?
type ZeroCache = Mutex<HashMap<(usize, usize, usize), bool>>;

fn zero_cache() -> &'static ZeroCache {
    static CACHE: OnceLock<ZeroCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().ok()?;
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if scale >= 0 {
        BigRational::from_integer(num * ten.pow(scale as u32))
    } else {
        BigRational::new(num, ten.pow((-scale) as u32))
    })
}

impl Alpha {
    /// The `k`-th positive root of `u_p`, negated when `negative`.
    pub fn critical(p: usize, k: usize, negative: bool) -> Result<Self> {
        let n = super::positive_root_count(p);
        if p < 2 || k == 0 || k > n {
            return Err(Error::Precondition(format!(
                "u_{p} has {n} positive roots, root index {k} is unavailable"
            )));
        }
        Ok(Self::Critical { p, k, negative })
    }

    /// Parses `root:p:k`, `-root:p:k`, a decimal literal or a fraction.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let (negative, body) = match t.strip_prefix('-') {
            Some(rest) if rest.starts_with("root:") => (true, rest),
            _ => (false, t),
        };
        if let Some(spec) = body.strip_prefix("root:") {
            let mut it = spec.split(':');
            let p = it.next().and_then(|x| x.parse().ok());
            let k = it.next().and_then(|x| x.parse().ok());
            return match (p, k, it.next()) {
                (Some(p), Some(k), None) => Self::critical(p, k, negative),
                _ => Err(Error::Parse(format!("malformed root token '{s}'"))),
            };
        }
        let value = parse_decimal(t).ok_or_else(|| Error::Parse(format!("cannot parse α from '{s}'")))?;
        if value.is_zero() {
            return Err(Error::ZeroGain);
        }
        Ok(Self::Rational(value))
    }

    /// Floating-point value.
    pub fn value(&self) -> f64 {
        match self {
            Self::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Self::Float(v) => *v,
            Self::Critical { p, k, negative } => {
                let v = isolated_roots(*p)[*k - 1].beta.sqrt();
                if *negative {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// `u_q(α)` in floating point.
    pub fn det(&self, q: usize) -> f64 {
        match self {
            Self::Rational(r) => det_h_exact(q, r).to_f64().unwrap_or(f64::NAN),
            _ => det_h(q, self.value()),
        }
    }

    /// True when this value was given exactly (rational or critical root).
    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::Float(_))
    }

    /// Decides `u_q(α) = 0`, exactly when possible.
    pub fn u_is_zero(&self, q: usize) -> bool {
        if q <= 1 {
            return false;
        }
        match self {
            Self::Rational(r) => det_h_exact(q, r).is_zero(),
            Self::Float(v) => det_h(q, *v).abs() <= ZERO_TOL,
            Self::Critical { p, k, .. } => {
                if *p == q {
                    return true;
                }
                let key = (*p, *k, q);
                if let Some(hit) = zero_cache().lock().expect("zero cache poisoned").get(&key) {
                    return *hit;
                }
                let g = Poly::gcd(&det_poly(*p), &det_poly(q));
                let root = &isolated_roots(*p)[*k - 1];
                let shared = g.degree().unwrap_or(0) > 0 && count_roots(&g.sturm_sequence(), &root.lo, &root.hi) > 0;
                zero_cache().lock().expect("zero cache poisoned").insert(key, shared);
                shared
            }
        }
    }

    /// True for a strictly negative value.
    pub fn is_negative(&self) -> bool {
        match self {
            Self::Rational(r) => r.is_negative(),
            Self::Float(v) => *v < 0.0,
            Self::Critical { negative, .. } => *negative,
        }
    }
}

impl From<f64> for Alpha {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rational(r) => {
                let v = r.to_f64().unwrap_or(f64::NAN);
                if parse_decimal(&v.to_string()).as_ref() == Some(r) {
                    write!(f, "{v}")
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Self::Float(v) => write!(f, "{v}"),
            Self::Critical { p, k, negative } => {
                write!(f, "{}root:{p}:{k}", if *negative { "-" } else { "" })
            }
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => Self::parse(&t).map_err(serde::de::Error::custom),
            Raw::Number(v) => Self::parse(&v.to_string()).map_err(serde::de::Error::custom),
        }
    }
}
