//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

pub type Rational = num_rational::BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `12`, `-3`, `1.5`, `.25`, `2e3` or `7/3` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fractional) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fractional.is_empty() {
        return None;
    }
    if !whole.chars().chain(fractional.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{whole}{fractional}");
    let mut value = Rational::from_integer(joined.parse::<BigInt>().ok()?);
    let scale = exponent - fractional.len() as i32;
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Exact decimal string when the denominator has only factors 2 and 5.
pub fn exact_decimal(r: &Rational) -> Option<String> {
    let mut den = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    Some(decimal(r, twos.max(fives)))
}

/// Decimal rendering rounded toward zero at `places` digits.
pub fn decimal(r: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = (r.numer().abs() * &scale) / r.denom();
    let digits = scaled.to_string();
    let sign = if r.is_negative() && !scaled.is_zero() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{:0>width$}", digits, width = places + 1);
    let (whole, fractional) = padded.split_at(padded.len() - places);
    format!("{sign}{whole}.{fractional}")
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Harmonic numbers `H(0..=max)` with `H(0) = 0`.
pub fn harmonic_table(max: usize) -> Vec<Rational> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = Rational::zero();
    table.push(acc.clone());
    for l in 1..=max {
        acc += frac(1, l as i64);
        table.push(acc.clone());
    }
    table
}

pub fn harmonic(l: usize) -> Rational {
    harmonic_table(l).pop().unwrap()
}

/// JSON form of an exact rational: numerator and denominator as strings plus a decimal rendering.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
    pub decimal: String,
}

impl From<&Rational> for RationalJson {
    fn from(r: &Rational) -> Self {
        RationalJson {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            decimal: decimal(r, 6),
        }
    }
}

/// Serializes a rational as [`RationalJson`].
pub fn serialize<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    RationalJson::from(r).serialize(s)
}

/// Exact surrogate for ln 4 used in certificates: 1.386295 > ln 4.
pub fn ln4_surrogate() -> Rational {
    frac(1_386_295, 1_000_000)
}

/// Quasi-bipartite potential bound 73/60.
pub fn quasi_bound() -> Rational {
    frac(73, 60)
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational("1.5"), Some(frac(3, 2)));
        assert_eq!(parse_rational("-0.25"), Some(frac(-1, 4)));
        assert_eq!(parse_rational("2e2"), Some(int(200)));
        assert_eq!(parse_rational("7/3"), Some(frac(7, 3)));
        assert_eq!(parse_rational(".5"), Some(frac(1, 2)));
        assert_eq!(parse_rational("1.2.3"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal(&frac(73, 60), 4), "1.2166");
        assert_eq!(decimal(&frac(-1, 8), 3), "-0.125");
        assert_eq!(exact_decimal(&frac(3, 8)).as_deref(), Some("0.375"));
        assert_eq!(exact_decimal(&frac(1, 3)), None);
        assert_eq!(exact_decimal(&int(4)).as_deref(), Some("4"));
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1), int(1));
        assert_eq!(harmonic(4), frac(25, 12));
        assert_eq!(harmonic_table(2), vec![int(0), int(1), frac(3, 2)]);
    }
}
