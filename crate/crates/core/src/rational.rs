//! Exact cost arithmetic.
//!
//! Costs, utilities and confidences are kept as reduced fractions so that
//! bound comparisons in the solvers are exact. Decimal text such as `2.75`
//! is scaled into a fraction on input.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact non-negative cost / utility value.
pub type Rational = Ratio<i64>;

/// Parses `7`, `2.75`, `-0.5` or `3/4` into an exact fraction.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Domain(format!("not a number: {text:?}"));
    if text.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, den));
    }
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac_part.len() > 12 {
        return Err(Error::Domain(format!("too many decimal places: {text:?}")));
    }
    let scale = 10i64.pow(frac_part.len() as u32);
    let whole: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let num = whole
        .checked_mul(scale)
        .and_then(|w| w.checked_add(frac))
        .ok_or_else(bad)?;
    let value = Ratio::new(num, scale);
    Ok(if negative { -value } else { value })
}

/// Renders integers as `7`, terminating decimals as `2.75`, and anything
/// else as `num/den`. Output always parses back to the same value.
pub fn format_rational(value: &Rational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    let mut den = *value.denom();
    let mut pow10 = 1i64;
    let mut places = 0usize;
    for factor in [2i64, 5] {
        while den % factor == 0 {
            den /= factor;
        }
    }
    if den == 1 {
        while pow10 % value.denom() != 0 && places < 12 {
            pow10 *= 10;
            places += 1;
        }
        if pow10 % value.denom() == 0 {
            let scaled = value * Ratio::from_integer(pow10);
            let n = scaled.to_integer();
            let sign = if n < 0 { "-" } else { "" };
            let n = n.unsigned_abs();
            let p = pow10 as u64;
            return format!("{sign}{}.{:0width$}", n / p, n % p, width = places);
        }
    }
    format!("{}/{}", value.numer(), value.denom())
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn is_non_negative(value: &Rational) -> bool {
    *value >= Rational::zero()
}

/// Serde adapter storing a [`Rational`] as its canonical text form.
pub mod serde_text {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}
