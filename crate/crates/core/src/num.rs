//! Exact rational arithmetic helpers.
//!
//! All model data and all evaluation arithmetic in this crate is exact: no
//! floating point enters any probability, reward, or value computation.
//! Decimal literals in input files are converted to rationals exactly
//! (`0.1` becomes `1/10`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// The scalar type used throughout: an arbitrary-precision rational.
pub type Q = BigRational;

/// Rational from an integer.
pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a rational literal: `a/b`, an integer, or a decimal such as `0.25`.
///
/// Decimals are read exactly (`0.1` is `1/10`), never through floating point.
pub fn parse_rational(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty number".to_string());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator `{num}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator `{den}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(Q::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int_part: BigInt = if int == "-" || int.is_empty() {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| format!("bad number `{s}`"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal `{s}`"));
        }
        let frac_num: BigInt = frac.parse().map_err(|_| format!("bad decimal `{s}`"))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let magnitude = int_part.abs() * &scale + frac_num;
        let signed = if neg { -magnitude } else { magnitude };
        return Ok(Q::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(|_| format!("bad number `{s}`"))?;
    Ok(Q::from_integer(n))
}

/// Renders a rational in canonical literal form (`28871/390`, `30`, `-1/2`).
pub fn format_rational(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Decimal rendering with a fixed number of digits, for display only.
pub fn decimal_string(x: &Q, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (x * Q::from_integer(scale.clone())).round();
    let v = scaled.numer().clone();
    let neg = v.is_negative();
    let mag = v.abs();
    let int = &mag / &scale;
    let frac = &mag % &scale;
    let frac_str = format!("{:0width$}", frac, width = digits);
    let trimmed = frac_str.trim_end_matches('0');
    let sign = if neg { "-" } else { "" };
    if trimmed.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{trimmed}")
    }
}

/// Absolute value.
pub fn abs(x: &Q) -> Q {
    if x < &Q::zero() {
        -x.clone()
    } else {
        x.clone()
    }
}

/// Approximate `f64` value, for human-readable output only.
pub fn to_f64(x: &Q) -> f64 {
    x.numer()
        .to_f64()
        .and_then(|n| x.denom().to_f64().map(|d| n / d))
        .unwrap_or(f64::NAN)
}
