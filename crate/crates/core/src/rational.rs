//! Exact rational values used for relaxation bounds and efficiency percentages.
//!
//! Everything that is reported with two decimals is carried as an exact
//! fraction and only rounded when rendered, so printed tables are
//! reproducible bit for bit.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// An exact fraction kept in lowest terms with a positive denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RationalValue(BigRational);

impl RationalValue {
    /// Builds `numerator / denominator`. Panics on a zero denominator.
    pub fn new(numerator: i64, denominator: i64) -> Self {
        assert!(denominator != 0, "zero denominator");
        Self(BigRational::new(
            BigInt::from(numerator),
            BigInt::from(denominator),
        ))
    }

    pub fn from_integer(value: i64) -> Self {
        Self(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn from_u64(value: u64) -> Self {
        Self(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numerator(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Largest integer not above the value.
    pub fn floor(&self) -> BigInt {
        self.0.numer().div_floor(self.0.denom())
    }

    /// Decimal rendering with `decimals` digits, rounding half away from zero.
    pub fn to_fixed(&self, decimals: u32) -> String {
        let scale = BigInt::from(10u32).pow(decimals);
        let negative = self.0.is_negative();
        let magnitude = self.0.abs();
        // round(|x| * 10^d) = floor(|x| * 10^d + 1/2)
        let scaled = magnitude * BigRational::from_integer(scale.clone());
        let two = BigInt::from(2);
        let rounded = (scaled.numer() * &two + scaled.denom()).div_floor(&(scaled.denom() * &two));
        let (int_part, frac_part) = rounded.div_rem(&scale);
        let sign = if negative && !rounded.is_zero() {
            "-"
        } else {
            ""
        };
        if decimals == 0 {
            format!("{sign}{int_part}")
        } else {
            format!(
                "{sign}{int_part}.{:0>width$}",
                frac_part.to_string(),
                width = decimals as usize
            )
        }
    }

    /// Parses a plain decimal literal such as `0.35`, `-1.2` or `633` exactly.
    pub fn parse_decimal(text: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidParameter(format!("not a decimal number: {text:?}"));
        let trimmed = text.trim();
        let (negative, digits) = match trimmed.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
        };
        let (whole, frac) = match digits.split_once('.') {
            Some((w, f)) => (w, f),
            None => (digits, ""),
        };
        if (whole.is_empty() && frac.is_empty())
            || !whole.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let mut numerator: BigInt = format!("{whole}{frac}")
            .trim_start_matches('0')
            .parse()
            .unwrap_or_else(|_| BigInt::zero());
        if negative {
            numerator = -numerator;
        }
        let denominator = BigInt::from(10u32).pow(frac.len() as u32);
        Ok(Self(BigRational::new(numerator, denominator)))
    }
}

impl fmt::Display for RationalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for RationalValue {
    type Err = Error;

    /// Accepts `a/b` fractions as well as decimal literals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad fraction {s:?}")))?;
            let d: BigInt = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad fraction {s:?}")))?;
            if d.is_zero() {
                return Err(Error::InvalidParameter(format!(
                    "zero denominator in {s:?}"
                )));
            }
            return Ok(Self(BigRational::new(n, d)));
        }
        Self::parse_decimal(s)
    }
}

impl From<u64> for RationalValue {
    fn from(value: u64) -> Self {
        Self::from_u64(value)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for RationalValue {
            type Output = RationalValue;
            fn $method(self, rhs: RationalValue) -> RationalValue {
                RationalValue($trait::$method(self.0, rhs.0))
            }
        }
        impl<'a> $trait<&'a RationalValue> for &'a RationalValue {
            type Output = RationalValue;
            fn $method(self, rhs: &'a RationalValue) -> RationalValue {
                RationalValue($trait::$method(&self.0, &rhs.0))
            }
        }
        impl<'a> $trait<&'a RationalValue> for RationalValue {
            type Output = RationalValue;
            fn $method(self, rhs: &'a RationalValue) -> RationalValue {
                RationalValue($trait::$method(self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&RationalValue> for RationalValue {
    fn add_assign(&mut self, rhs: &RationalValue) {
        self.0 += &rhs.0;
    }
}

impl Neg for RationalValue {
    type Output = RationalValue;
    fn neg(self) -> RationalValue {
        RationalValue(-self.0)
    }
}

impl Sum for RationalValue {
    fn sum<I: Iterator<Item = RationalValue>>(iter: I) -> Self {
        iter.fold(RationalValue::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a RationalValue> for RationalValue {
    fn sum<I: Iterator<Item = &'a RationalValue>>(iter: I) -> Self {
        iter.fold(RationalValue::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_form() {
        let r = RationalValue::new(6, -4);
        assert_eq!(r.numerator(), &BigInt::from(-3));
        assert_eq!(r.denominator(), &BigInt::from(2));
    }

    #[test]
    fn round_half_up_rendering() {
        assert_eq!(RationalValue::new(1595, 113).to_fixed(2), "14.12");
        assert_eq!(RationalValue::new(8, 5).to_fixed(2), "1.60");
        assert_eq!(RationalValue::new(1, 200).to_fixed(2), "0.01");
        assert_eq!(RationalValue::new(-1, 200).to_fixed(2), "-0.01");
        assert_eq!(RationalValue::new(-1, 1000).to_fixed(2), "0.00");
        assert_eq!(RationalValue::new(20, 3).to_fixed(2), "6.67");
        assert_eq!(RationalValue::from_integer(15).to_fixed(0), "15");
    }

    #[test]
    fn parse_decimal_is_exact() {
        assert_eq!(
            RationalValue::parse_decimal("0.35").unwrap(),
            RationalValue::new(7, 20)
        );
        assert_eq!(
            "1.26".parse::<RationalValue>().unwrap(),
            RationalValue::new(126, 100)
        );
        assert_eq!(
            "3/4".parse::<RationalValue>().unwrap(),
            RationalValue::new(3, 4)
        );
        assert_eq!(
            RationalValue::parse_decimal("-0.5").unwrap(),
            RationalValue::new(-1, 2)
        );
        assert!(RationalValue::parse_decimal("1.2.3").is_err());
        assert!(RationalValue::parse_decimal("").is_err());
        assert!(RationalValue::parse_decimal("abc").is_err());
    }

    #[test]
    fn ordering_is_exact() {
        let a = RationalValue::new(360 * 704, 361);
        let b = RationalValue::from_integer(633);
        assert!(b < a);
        assert!(RationalValue::new(1, 3) < RationalValue::new(334, 1000));
    }
}
