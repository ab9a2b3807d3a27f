//! Exact rational probabilities and their `num/den` text form.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms.
pub type Rational = num_rational::BigRational;

/// Builds `num/den`. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Renders as `num/den`, including integers (`1/1`, `0/1`).
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer. No whitespace is allowed inside the token.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = |why: &str| Error::InvalidArgument(format!("bad rational `{s}`: {why}"));
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(bad("expected `num/den`"));
    }
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = n.parse().map_err(|_| bad("numerator is not an integer"))?;
    let den: BigInt = d.parse().map_err(|_| bad("denominator is not an integer"))?;
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    if den.is_negative() {
        return Err(bad("negative denominator"));
    }
    Ok(Rational::new(num, den))
}

pub fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

/// Lossy conversion for sampling and display of approximate statistics.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Truncates a non-negative float to a dyadic rational with denominator `2^bits`.
pub fn from_f64_truncated(x: f64, bits: u32) -> Rational {
    let scale = (1u128 << bits) as f64;
    let scaled = (x * scale).floor().max(0.0);
    Rational::new(BigInt::from(scaled as u128), BigInt::from(1u128 << bits))
}

pub fn sum<'a>(items: impl IntoIterator<Item = &'a Rational>) -> Rational {
    items.into_iter().fold(Rational::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
        assert_eq!(format_rational(&ratio(1, 2)), "1/2");
        assert_eq!(format_rational(&zero()), "0/1");
        assert_eq!(format_rational(&one()), "1/1");
        assert_eq!(parse_rational("3").unwrap(), ratio(3, 1));
        assert_eq!(parse_rational("-1/3").unwrap(), ratio(-1, 3));
    }

    #[test]
    fn rejects_malformed() {
        for s in ["", "1/0", "a/2", "1 /2", "1/-2", "1/2/3"] {
            assert!(parse_rational(s).is_err(), "{s}");
        }
    }

    #[test]
    fn truncation_is_dyadic() {
        let r = from_f64_truncated(0.75, 8);
        assert_eq!(r, ratio(3, 4));
        let r = from_f64_truncated(1.0 / 3.0, 4);
        assert_eq!(r, ratio(5, 16));
    }
}
