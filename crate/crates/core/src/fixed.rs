//! Binary fixed-point helpers on `BigInt`: a value `x` at precision `b` is
//! stored as the integer `round(x * 2^b)`.

use std::sync::{Mutex, OnceLock};

use num::bigint::Sign as BigSign;
use num::{BigInt, BigRational, Signed, ToPrimitive, Zero};

/// `ln 2` at `bits` fractional bits, from `2 atanh(1/3)`. The highest
/// precision computed so far is cached and shifted down on later calls.
pub(crate) fn ln2(bits: u32) -> BigInt {
    static CACHE: OnceLock<Mutex<(u32, BigInt)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((0, BigInt::zero())));
    let mut guard = cache.lock().unwrap();
    if guard.0 < bits {
        let work = bits + 32;
        let mut t: BigInt = (BigInt::from(1) << work) / 3;
        let mut sum = BigInt::zero();
        let mut k: u64 = 1;
        while !t.is_zero() {
            sum += &t / k;
            t /= 9;
            k += 2;
        }
        *guard = (work, sum << 1);
    }
    &guard.1 >> (guard.0 - bits)
}

/// `floor(r * 2^bits)`.
pub(crate) fn to_fixed(r: &BigRational, bits: u32) -> BigInt {
    num::Integer::div_floor(&(r.numer() << bits), r.denom())
}

/// `e^y * 2^bits`, correct to a few units in the last place.
pub(crate) fn exp_fixed(y: &BigRational, bits: u32) -> BigInt {
    let yf = crate::scalar::rational_to_f64(y);
    let k = (yf / std::f64::consts::LN_2).round() as i64;
    if k + bits as i64 + 4 < 0 {
        return BigInt::zero();
    }
    // e^y = 2^k e^r with |r| <= ln(2)/2 (up to the rounding of yf)
    let p = (bits as i64 + k).max(0) as u32 + 24;
    let q = p + 72;
    let r = to_fixed(y, q) - BigInt::from(k) * ln2(q);
    let one = BigInt::from(1) << q;
    let mut term = one.clone();
    let mut sum = one;
    let mut i = 1u64;
    loop {
        term = ((&term * &r) >> q) / i;
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    let e = sum >> (q - p);
    let shift = k + bits as i64 - p as i64;
    if shift >= 0 {
        e << shift as u32
    } else {
        e >> (-shift) as u32
    }
}

/// `ln |x|` for a nonzero integer, without overflow.
pub(crate) fn ln_abs(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.abs().to_f64().unwrap().ln();
    }
    let top = (x.abs() >> (bits - 64)).to_u64().unwrap() as f64;
    top.ln() + (bits - 64) as f64 * std::f64::consts::LN_2
}

/// `x / 2^bits` as a float, computed through logs so that it neither
/// overflows nor underflows before the caller rescales it.
pub(crate) fn scaled_log(x: &BigInt, bits: u32) -> Option<(f64, bool)> {
    if x.is_zero() {
        return None;
    }
    Some((ln_abs(x) - bits as f64 * std::f64::consts::LN_2, x.sign() == BigSign::Minus))
}
