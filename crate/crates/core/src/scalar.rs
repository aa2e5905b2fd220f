//! Numeric plumbing: the exact rational type and the `Scalar` trait that
//! lets geometric predicates run on either rationals or `f64`.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Arbitrary-precision rational, always stored in reduced form with a
/// positive denominator.
pub type Rational = BigRational;

/// Scale used to turn 53 random bits into a unit-interval value.
const UNIT_DENOM_BITS: usize = 53;

pub trait Scalar: Clone + PartialOrd + Debug + Num + Neg<Output = Self> + Send + Sync {
    fn from_u64(v: u64) -> Self;
    fn to_f64(&self) -> f64;
    /// `bits / 2^53` for the low 53 bits of `bits`; exact in both flavors.
    fn from_unit_bits(bits: u64) -> Self;

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    fn from_u64(v: u64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_unit_bits(bits: u64) -> Self {
        (bits >> 11) as f64 * (1.0 / (1u64 << UNIT_DENOM_BITS) as f64)
    }
}

impl Scalar for Rational {
    fn from_u64(v: u64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_unit_bits(bits: u64) -> Self {
        Rational::new(BigInt::from(bits >> 11), BigInt::one() << UNIT_DENOM_BITS)
    }
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.4"` into an exact
/// rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return domain("empty rational string");
    }
    let bad = || crate::error::Error::Domain(format!("malformed rational {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return domain(format!("zero denominator in {text:?}"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        let negative = whole.starts_with('-');
        let digits_ok = |s: &str| s.chars().all(|c| c.is_ascii_digit());
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !digits_ok(whole_digits) || !digits_ok(frac) || (whole_digits.is_empty() && frac.is_empty()) {
            return Err(bad());
        }
        let joined = format!("{whole_digits}{frac}");
        let mut num: BigInt = if joined.is_empty() { BigInt::zero() } else { joined.parse().map_err(|_| bad())? };
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Rational::new(num, den));
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Always `"p/q"`, including integers (`"1/1"`).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational_list(text: &str) -> Result<Vec<Rational>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_rational).collect()
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn rational_pow(base: &Rational, exp: u64) -> Rational {
    num_traits::pow(base.clone(), exp as usize)
}

/// Serde adapters for rationals carried as `"p/q"` strings.
pub mod serde_rational {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let items = Vec::<String>::deserialize(d)?;
            items
                .iter()
                .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}
