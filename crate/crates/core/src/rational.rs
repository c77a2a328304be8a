//! Exact rationals used throughout the fiber layer.

use alloc::string::{String, ToString};
use core::fmt::Write;
use core::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Arbitrary-precision rational number.
pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

pub fn half() -> Q {
    q(1, 2)
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.25"` / `"1e-6"`.
pub fn parse(text: &str) -> Result<Q, Error> {
    let s = text.trim();
    let bad = || Error::Parse(alloc::format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut all = String::from(int_part);
    all.push_str(frac_part);
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Q::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Canonical `p/q` rendering; integers print without a denominator.
pub fn render(value: &Q) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        alloc::format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering rounded half-away-from-zero to `places` digits.
pub fn render_decimal(value: &Q, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value.abs() * Q::from_integer(scale.clone());
    let rounded = (scaled + half()).floor().to_integer();
    let (int_part, frac_part) = rounded.div_rem(&scale);
    let mut out = String::new();
    if value.is_negative() && !rounded.is_zero() {
        out.push('-');
    }
    let _ = write!(out, "{int_part}");
    if places > 0 {
        let frac = frac_part.to_string();
        out.push('.');
        for _ in frac.len()..places {
            out.push('0');
        }
        out.push_str(&frac);
    }
    out
}

pub fn to_f64(value: &Q) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn abs_diff(a: &Q, b: &Q) -> Q {
    (a - b).abs()
}

pub fn in_unit_interval(value: &Q) -> bool {
    !value.is_negative() && *value <= one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse("3/10").unwrap(), q(3, 10));
        assert_eq!(parse(" 2 ").unwrap(), q(2, 1));
        assert_eq!(parse("0.25").unwrap(), q(1, 4));
        assert_eq!(parse("1e-6").unwrap(), q(1, 1_000_000));
        assert_eq!(parse("-1.5e1").unwrap(), q(-15, 1));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn renders() {
        assert_eq!(render(&q(2, 4)), "1/2");
        assert_eq!(render(&q(3, 1)), "3");
        assert_eq!(render_decimal(&q(1, 3), 4), "0.3333");
        assert_eq!(render_decimal(&q(2, 3), 2), "0.67");
        assert_eq!(render_decimal(&q(-1, 2), 1), "-0.5");
        assert_eq!(render_decimal(&q(1, 1), 0), "1");
    }
}
