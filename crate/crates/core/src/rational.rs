//! Exact rational scalars.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Canonical reduced fraction with a positive denominator.
pub type Rational = num_rational::Ratio<i128>;

#[inline]
pub fn rat(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

#[inline]
pub fn int(value: i128) -> Rational {
    Rational::from_integer(value)
}

pub fn in_closed(value: &Rational, lo: &Rational, hi: &Rational) -> bool {
    lo <= value && value <= hi
}

pub fn clamp(value: Rational, lo: &Rational, hi: &Rational) -> Rational {
    if value < *lo {
        *lo
    } else if value > *hi {
        *hi
    } else {
        value
    }
}

/// Least common multiple of the denominators, i.e. the smallest `D` such that
/// every value times `D` is an integer.
pub fn common_denominator<'a, I: IntoIterator<Item = &'a Rational>>(values: I) -> i128 {
    values
        .into_iter()
        .fold(1i128, |acc, v| acc.lcm(v.denom()))
}

/// Returns the value as an integer if it is one.
pub fn as_integer(value: &Rational) -> Option<i128> {
    if value.denom().is_one() {
        Some(*value.numer())
    } else {
        None
    }
}

pub fn is_positive(value: &Rational) -> bool {
    !value.is_zero() && value.is_positive()
}

pub fn to_f64(value: &Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}
