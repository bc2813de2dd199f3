//! Exact rational scalars and their text representation.
//!
//! Numbers in instance files are written either as `p/q`, as integers, or as
//! decimals. Decimals (including an optional exponent) are parsed as exact
//! decimal fractions, so parsing never rounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rational = BigRational;

/// Builds a rational from an integer numerator and denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn from_int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNumberError {
    pub token: String,
}

impl std::fmt::Display for ParseNumberError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "not a number: {:?}", self.token)
    }
}

impl std::error::Error for ParseNumberError {}

/// Parses `p/q`, an integer, or a decimal with optional exponent, exactly.
pub fn parse_rational(token: &str) -> Result<Rational, ParseNumberError> {
    let err = || ParseNumberError {
        token: token.to_string(),
    };
    if let Some((num, den)) = token.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    parse_decimal(token).ok_or_else(err)
}

fn parse_decimal(token: &str) -> Option<Rational> {
    let (mantissa, exp) = match token.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (token, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let joined = format!("{}{}", int_part, frac_part);
    let mantissa_int = BigInt::from_str(if joined.is_empty() { "0" } else { &joined }).ok()?;
    let shift = exp - frac_part.len() as i32;
    let mut value = Rational::from_integer(mantissa_int * BigInt::from(sign));
    let ten = Rational::from_integer(BigInt::from(10));
    match shift.cmp(&0) {
        std::cmp::Ordering::Greater => {
            for _ in 0..shift {
                value *= ten.clone();
            }
        }
        std::cmp::Ordering::Less => {
            for _ in 0..(-shift) {
                value /= ten.clone();
            }
        }
        std::cmp::Ordering::Equal => {}
    }
    Some(value)
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(v: &Rational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Nearest f64; grid scales in this crate keep this well inside range.
pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        if v.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational equal to the given finite f64.
pub fn from_f64_exact(v: f64) -> Rational {
    Rational::from_float(v).expect("finite float")
}
