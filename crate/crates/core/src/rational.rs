//! Exact arithmetic for costs, rates and capacities.
//!
//! Every cost comparison in the solver is exact, so floating point never
//! enters feasibility checks. Values are written as `"p"` or `"p/q"` and
//! accepted back from integers, `"p/q"` strings or finite decimals.

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserializer, Serializer};

use crate::error::ParseError;

pub type Rational = Ratio<i64>;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Canonical text form: `"7"` or `"7/3"`.
pub fn format(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fixed-point decimal rendering with `digits` fractional digits, rounded half away from zero.
pub fn format_decimal(r: &Rational, digits: u32) -> String {
    let scale = 10i128.pow(digits);
    let num = *r.numer() as i128 * scale;
    let den = *r.denom() as i128;
    let mut q = num / den;
    let rem = (num % den).abs();
    if rem * 2 >= den {
        q += if num < 0 { -1 } else { 1 };
    }
    let neg = q < 0;
    let q = q.abs();
    let whole = q / scale;
    let frac = q % scale;
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{frac:0width$}", width = digits as usize)
    }
}

/// Parses `"p"`, `"p/q"`, or a finite decimal such as `"1.25"` / `"-3e2"`.
pub fn parse(text: &str) -> Result<Rational, ParseError> {
    let t = text.trim();
    let bad = || ParseError::Number(t.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let mut numer: i64 = if joined.is_empty() { 0 } else { joined.parse().map_err(|_| bad())? };
    let mut scale = exp - frac.len() as i32;
    let mut denom: i64 = 1;
    while scale > 0 {
        numer = numer.checked_mul(10).ok_or_else(bad)?;
        scale -= 1;
    }
    while scale < 0 {
        denom = denom.checked_mul(10).ok_or_else(bad)?;
        scale += 1;
    }
    if neg {
        numer = -numer;
    }
    Ok(Rational::new(numer, denom))
}

/// Serde adapter: serializes as a canonical string, accepts strings or JSON numbers.
pub mod serde_text {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    pub(crate) struct RationalVisitor;

    impl Visitor<'_> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a rational as integer, decimal, or \"p/q\" string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            i64::try_from(v).map(int).map_err(E::custom)
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            // `f64` Display prints the shortest round-tripping decimal.
            parse(&v.to_string()).map_err(E::custom)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse(v).map_err(E::custom)
        }
    }
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !(*r < Rational::zero())
}
