//! Numeric scalars shared by every algorithm in the crate.
//!
//! Two modes are supported. Exact mode uses [`BigRational`] and every sign
//! decision is exact. Float mode uses `f64` and every comparison against zero
//! goes through an explicit tolerance; values inside the tolerance band are
//! reported as [`Sign::Zero`] and callers turn that into a `Marginal` verdict.

use std::fmt::{Debug, Display};

use num::bigint::Sign as BigSign;
use num::rational::Ratio;
use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

/// Default tolerance for float-mode comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Three-way sign of a scalar after tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// Field operations plus the conversions the crate needs.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + num::Num
    + Signed
    + std::iter::Sum
    + 'static
{
    /// True for exact rational arithmetic.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    fn from_rational(v: &BigRational) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
    /// Exact conversion from a float in exact mode (every finite `f64` is a
    /// dyadic rational).
    fn from_f64(v: f64) -> Option<Self>;
    fn to_f64(&self) -> f64;

    /// Sign after tolerance. Exact mode ignores `tol`.
    fn sign(&self, tol: f64) -> Sign;

    /// Integer power, negative exponents allowed.
    fn powi(&self, k: i64) -> Self {
        let mut base = if k < 0 { Self::one() / self.clone() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    /// `sum_i coeffs[i] * v[i]`.
    fn dot_int(coeffs: &[BigInt], v: &[Self]) -> Self {
        coeffs
            .iter()
            .zip(v)
            .fold(Self::zero(), |acc, (c, x)| acc + Self::from_bigint(c) * x.clone())
    }

    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
    fn from_rational(v: &BigRational) -> Self {
        v.clone()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn sign(&self, _tol: f64) -> Sign {
        match self.numer().sign() {
            BigSign::Minus => Sign::Negative,
            BigSign::NoSign => Sign::Zero,
            BigSign::Plus => Sign::Positive,
        }
    }
    fn dot_int(coeffs: &[BigInt], v: &[Self]) -> Self {
        // Common denominator keeps the inner loop in integer arithmetic.
        let den = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let mut total = BigInt::zero();
        for (c, x) in coeffs.iter().zip(v) {
            if c.is_zero() {
                continue;
            }
            total += c * x.numer() * (&den / x.denom());
        }
        BigRational::new(total, den)
    }
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Self::from_i64(i))
                } else {
                    parse_rational(&n.to_string())
                }
            }
            _ => Err(Error::Parse(format!("expected rational, got {v}"))),
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }
    fn from_rational(v: &BigRational) -> Self {
        rational_to_f64(v)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sign(&self, tol: f64) -> Sign {
        if *self > tol {
            Sign::Positive
        } else if *self < -tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
    fn powi(&self, k: i64) -> Self {
        if let Ok(k32) = i32::try_from(k) {
            f64::powi(*self, k32)
        } else {
            f64::powf(*self, k as f64)
        }
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
            Value::String(s) => parse_rational(s).map(|r| rational_to_f64(&r)),
            _ => Err(Error::Parse(format!("expected number, got {v}"))),
        }
    }
}

/// Converts a rational to the nearest-ish `f64`, including values whose
/// numerator and denominator overflow `f64` on their own.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Shift so the quotient carries about 64 significant bits.
    let shift = 64 - (nb - db);
    let (num, den) = if shift >= 0 {
        (r.numer() << (shift as usize), r.denom().clone())
    } else {
        (r.numer().clone(), r.denom() << ((-shift) as usize))
    };
    let q = (num / den).to_f64().unwrap_or(f64::NAN);
    let half = (shift / 2) as i32;
    q * 2f64.powi(-half) * 2f64.powi(-(shift as i32 - half))
}

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, an integer, or a decimal literal (optionally with an
/// exponent) into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p = parse_rational(p)?;
        let q = parse_rational(q)?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(p / q);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
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
    let all: String = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    if neg {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(num * num::pow(ten, scale as usize))
    } else {
        Ratio::new(num, num::pow(ten, (-scale) as usize))
    };
    Ok(r)
}

/// Binomial coefficient `C(n, k)` as a big integer; zero outside `0..=n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Natural log of `C(n, k)` for nonnegative integers, `-inf` outside range.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial coefficient converted into the scalar type.
pub fn binom<T: Scalar>(n: i64, k: i64) -> T {
    T::from_bigint(&binomial(n, k))
}

/// Falling factorial `l (l-1) ... (l-k+1)`.
pub fn falling_factorial(l: i64, k: usize) -> BigInt {
    (0..k as i64).fold(BigInt::one(), |acc, i| acc * BigInt::from(l - i))
}

/// Log-sum-exp of a slice, `-inf` for empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
