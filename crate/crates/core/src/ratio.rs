//! Exact rational scalar used by the identity-checking backends.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

/// `n / d` as an exact rational. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Integer `n` as an exact rational.
pub fn rint(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rzero() -> Rat {
    BigRational::zero()
}

pub fn rone() -> Rat {
    BigRational::one()
}

/// `x` raised to a nonnegative integer power, by squaring.
pub fn rpow(x: &Rat, mut k: usize) -> Rat {
    let mut base = x.clone();
    let mut acc = rone();
    while k > 0 {
        if k & 1 == 1 {
            acc *= &base;
        }
        k >>= 1;
        if k > 0 {
            base = base.clone() * &base;
        }
    }
    acc
}

/// Lossy conversion for float backends and report output.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.25`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let err = |msg: &str| Error::InvalidParameter(format!("bad rational {s:?}: {msg}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err("numerator"))?;
        let q: BigInt = q.trim().parse().map_err(|_| err("denominator"))?;
        if q.is_zero() {
            return Err(err("denominator is zero"));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int_part: BigInt = if int.is_empty() {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| err("integer part"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("fractional part"));
        }
        let digits: BigInt = frac.parse().map_err(|_| err("fractional part"))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let negative = int.trim_start().starts_with('-');
        let abs = int_part.abs() * &scale + digits;
        let signed = if negative { -abs } else { abs };
        return Ok(BigRational::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(|_| err("integer"))?;
    Ok(BigRational::from_integer(n))
}

/// Compact `p/q` form used in exports (`3` rather than `3/1`).
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat("-7").unwrap(), rint(-7));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn formats_reduced() {
        assert_eq!(format_rat(&rat(2, 4)), "1/2");
        assert_eq!(format_rat(&rint(5)), "5");
    }

    #[test]
    fn powers_by_squaring() {
        assert_eq!(rpow(&rat(2, 3), 0), rone());
        assert_eq!(rpow(&rat(2, 3), 1), rat(2, 3));
        assert_eq!(rpow(&rat(2, 3), 5), rat(32, 243));
        assert_eq!(rpow(&rint(-2), 3), rint(-8));
    }
}
