//! Numeric backends: IEEE doubles for everyday runs and arbitrary precision
//! rationals for reproducing exact values.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Field operations plus the handful of conversions the solvers need.
///
/// Every algorithm in this crate is generic over `Scalar`. With [`f64`]
/// comparisons go through tolerances; with [`Rational`] the default
/// tolerance is zero and every comparison is exact.
pub trait Scalar:
    Num + Signed + Clone + Debug + Display + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// `true` for exact arithmetic.
    const EXACT: bool;

    /// Tolerance used when nothing else is configured.
    fn default_tol() -> Self;

    /// Converts a double. Rationals take the exact binary value.
    fn from_f64_exact(x: f64) -> Self;

    /// Parses `"3"`, `"-0.25"`, `"1e-3"` or `"7/3"`.
    fn parse_str(s: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("integer conversion")
    }

    fn ratio(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }

    fn half() -> Self {
        Self::ratio(1, 2)
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// `|a - b| <= tol * (1 + max(|a|, |b|))`.
    fn approx_eq(&self, other: &Self, tol: &Self) -> bool {
        let scale = Self::one() + Self::max_of(self.abs(), other.abs());
        (self.clone() - other.clone()).abs() <= tol.clone() * scale
    }

    /// Rendering used in reports: shortest round-trip decimal for doubles,
    /// `p/q` for rationals.
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn default_tol() -> Self {
        1e-12
    }

    fn from_f64_exact(x: f64) -> Self {
        x
    }

    fn parse_str(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            return (d != 0.0).then_some(n / d);
        }
        s.parse().ok().filter(|x: &f64| x.is_finite())
    }
}

/// Exact rational scalar.
pub type Rational = BigRational;

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn default_tol() -> Self {
        Self::zero()
    }

    fn from_f64_exact(x: f64) -> Self {
        BigRational::from_float(x).expect("finite double")
    }

    fn parse_str(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = parse_decimal(n.trim())?;
            let d = parse_decimal(d.trim())?;
            return (!d.is_zero()).then(|| n / d);
        }
        parse_decimal(s)
    }
}

/// Exact decimal parsing (`-12.5e-3` becomes `-1/80`).
fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all_digits.is_empty() { "0" } else { &all_digits }).ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let mut value = BigRational::from_integer(numer);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Returns `x` clamped to zero when `|x| <= tol`.
pub fn snap_zero<S: Scalar>(x: S, tol: &S) -> S {
    if x.abs() <= *tol {
        S::zero()
    } else {
        x
    }
}

/// Sum of an iterator of scalars.
pub fn sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}
