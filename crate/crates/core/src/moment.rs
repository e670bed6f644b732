//! Truncated moment problem on the integer grid `{0, 1, ..., l}`.
//!
//! A vector of power moments `v[0..=n]` is realized by a probability law on
//! `{0, ..., l}` exactly when `sum_i c_i v_i >= 0` for every polynomial
//! `P(x) = sum_i c_i x^i` of degree `n` that is nonnegative on the grid and
//! has `n` simple roots in it. Those extremal polynomials have their roots in
//! disjoint adjacent pairs `{x, x+1}` plus a boundary set: empty or `{0, l}`
//! for even `n`, `{0}` or `{l}` for odd `n`.
//!
//! [`discrete_moment_feasible`] enumerates that family for the dual answer and
//! solves an exact phase-one linear program for a primal witness, and insists
//! that the two agree.

use num::{BigInt, One, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{domain, Error, Result};
use crate::scalar::{binomial, Scalar, Sign};
use crate::simplex::{phase_one, LpOutcome};

/// Default cap on the size of the extremal family.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// Which grid end points are roots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Boundary {
    None,
    Zero,
    End,
    Both,
}

/// A nonnegative-on-grid polynomial with `n` simple roots in `{0, ..., l}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtremalPolynomial {
    pub l: u64,
    /// Left ends `x` of the root pairs `{x, x + 1}`, increasing.
    pub pairs: Vec<u64>,
    pub boundary: Boundary,
    /// Coefficients in the monomial basis, constant term first.
    pub coeffs: Vec<BigInt>,
}

impl ExtremalPolynomial {
    pub fn new(l: u64, pairs: Vec<u64>, boundary: Boundary) -> Self {
        let mut coeffs = vec![BigInt::one()];
        let mul_linear = |c: &mut Vec<BigInt>, c0: BigInt, c1: BigInt| {
            // c <- c * (c0 + c1 x)
            let mut out = vec![BigInt::zero(); c.len() + 1];
            for (i, a) in c.iter().enumerate() {
                out[i] += a * &c0;
                out[i + 1] += a * &c1;
            }
            *c = out;
        };
        for &x in &pairs {
            mul_linear(&mut coeffs, -BigInt::from(x), BigInt::one());
            mul_linear(&mut coeffs, -BigInt::from(x + 1), BigInt::one());
        }
        if matches!(boundary, Boundary::Zero | Boundary::Both) {
            mul_linear(&mut coeffs, BigInt::zero(), BigInt::one());
        }
        if matches!(boundary, Boundary::End | Boundary::Both) {
            mul_linear(&mut coeffs, BigInt::from(l), -BigInt::one());
        }
        Self { l, pairs, boundary, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// All roots, increasing.
    pub fn roots(&self) -> Vec<u64> {
        let mut r: Vec<u64> = self.pairs.iter().flat_map(|&x| [x, x + 1]).collect();
        if matches!(self.boundary, Boundary::Zero | Boundary::Both) {
            r.push(0);
        }
        if matches!(self.boundary, Boundary::End | Boundary::Both) {
            r.push(self.l);
        }
        r.sort_unstable();
        r
    }

    pub fn eval(&self, x: i64) -> BigInt {
        let x = BigInt::from(x);
        self.coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * &x + c)
    }

    /// `sum_i c_i v_i`, the expectation of the polynomial under moments `v`.
    pub fn pairing<T: Scalar>(&self, v: &[T]) -> T {
        T::dot_int(&self.coeffs, v)
    }

    /// Human-readable factored form such as `x(x-1)(x-2)` or `(3-x)(x-1)(x-2)`.
    pub fn factored(&self) -> String {
        let mut s = String::new();
        if matches!(self.boundary, Boundary::Zero | Boundary::Both) {
            s.push('x');
        }
        if matches!(self.boundary, Boundary::End | Boundary::Both) {
            s.push_str(&format!("({}-x)", self.l));
        }
        for &x in &self.pairs {
            for r in [x, x + 1] {
                if r == 0 {
                    s.push_str("(x)");
                } else {
                    s.push_str(&format!("(x-{r})"));
                }
            }
        }
        s
    }
}

fn int_json(v: &BigInt) -> Value {
    match i64::try_from(v) {
        Ok(i) => json!(i),
        Err(_) => json!(v.to_string()),
    }
}

impl Serialize for ExtremalPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        json!({
            "l": self.l,
            "roots": self.roots(),
            "boundary": self.boundary,
            "coefficients": self.coeffs.iter().map(int_json).collect::<Vec<_>>(),
            "factored": self.factored(),
        })
        .serialize(s)
    }
}

/// Number of ways to place `p` disjoint adjacent pairs on `len` points.
fn pair_placements(len: u64, p: u64) -> u128 {
    if len < 2 * p {
        return 0;
    }
    let c = binomial((len - p) as i64, p as i64);
    u128::try_from(&c).unwrap_or(u128::MAX)
}

/// Size of the extremal family for degree `n` on `{0, ..., l}`.
pub fn count_extremal(n: usize, l: u64) -> u128 {
    let n = n as u64;
    if n == 0 {
        return 1;
    }
    if n % 2 == 0 {
        let p = n / 2;
        let inner = if l >= 1 { pair_placements(l - 1, p - 1) } else { 0 };
        pair_placements(l + 1, p).saturating_add(inner)
    } else {
        let p = (n - 1) / 2;
        pair_placements(l, p).saturating_mul(2)
    }
}

fn place_pairs(lo: u64, hi: u64, p: usize, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if p == 0 {
        out.push(prefix.clone());
        return;
    }
    // Leave room for the remaining p - 1 pairs after this one.
    let need = 2 * (p as u64 - 1);
    let mut x = lo;
    while x + 1 + need <= hi {
        prefix.push(x);
        place_pairs(x + 2, hi, p - 1, prefix, out);
        prefix.pop();
        x += 1;
    }
}

fn pair_sets(lo: u64, hi: u64, p: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    if hi + 1 >= lo {
        place_pairs(lo, hi, p, &mut Vec::new(), &mut out);
    }
    out
}

/// Root configurations `(pairs, boundary)` in enumeration order: pairs
/// lexicographic within each boundary case; for even degree the boundary
/// case comes last.
fn root_configurations(n: usize, l: u64) -> Vec<(Vec<u64>, Boundary)> {
    let mut out = Vec::new();
    if n == 0 {
        out.push((vec![], Boundary::None));
        return out;
    }
    if n % 2 == 0 {
        let p = n / 2;
        out.extend(pair_sets(0, l, p).into_iter().map(|s| (s, Boundary::None)));
        if l >= 2 || p == 1 {
            out.extend(
                pair_sets(1, l.saturating_sub(1), p - 1)
                    .into_iter()
                    .filter(|_| l >= 1)
                    .map(|s| (s, Boundary::Both)),
            );
        }
    } else {
        let p = (n - 1) / 2;
        if l >= 1 {
            out.extend(pair_sets(1, l, p).into_iter().map(|s| (s, Boundary::Zero)));
            out.extend(pair_sets(0, l - 1, p).into_iter().map(|s| (s, Boundary::End)));
        }
    }
    out
}

/// All extremal polynomials of degree `n` on `{0, ..., l}` in canonical order.
pub fn enumerate_extremal(n: usize, l: u64, cap: u128) -> Result<Vec<ExtremalPolynomial>> {
    if (n as u64) > l + 1 {
        return domain(format!("degree {n} exceeds the number of grid points {}", l + 1));
    }
    let count = count_extremal(n, l);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    Ok(root_configurations(n, l)
        .into_iter()
        .map(|(p, b)| ExtremalPolynomial::new(l, p, b))
        .collect())
}

/// Outcome of a moment feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility<T> {
    /// A law on `{0, ..., l}` with the requested moments.
    Feasible { witness: Vec<T> },
    /// An extremal polynomial with negative expectation.
    Infeasible { certificate: ExtremalPolynomial, pairing: T },
    /// A nonnegative-on-grid polynomial with negative expectation, found by
    /// the linear program when the extremal family is too large.
    InfeasibleLp { coefficients: Vec<T>, pairing: T },
    /// Float mode only: the smallest pairing is within tolerance of zero or
    /// the two routes disagree inside the tolerance band.
    Marginal { min_pairing: T },
}

impl<T: Scalar> Feasibility<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Feasibility::Infeasible { .. } | Feasibility::InfeasibleLp { .. })
    }
}

/// Smallest pairing over the extremal family; ties go to the earliest member.
/// Returns `None` for an empty family.
pub fn min_pairing<T: Scalar>(v: &[T], l: u64, cap: u128) -> Result<Option<(ExtremalPolynomial, T)>> {
    let n = v.len() - 1;
    let family = enumerate_extremal(n, l, cap)?;
    let best = family
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, p.pairing(v)))
        .reduce_with(|a, b| match b.1.partial_cmp(&a.1) {
            Some(std::cmp::Ordering::Less) => b,
            Some(std::cmp::Ordering::Equal) if b.0 < a.0 => b,
            _ => a,
        });
    Ok(best.map(|(i, val)| (family[i].clone(), val)))
}

/// Exact (or toleranced) linear program over laws on `{0, ..., l}` matching
/// `v`. Rows are scaled by `l^i` for conditioning.
pub fn lp_moments<T: Scalar>(v: &[T], l: u64, tol: f64) -> LpOutcome<T> {
    let n = v.len() - 1;
    let lt = T::from_i64(l.max(1) as i64);
    let a: Vec<Vec<T>> = (0..=n)
        .map(|i| {
            (0..=l)
                .map(|j| (T::from_i64(j as i64) / lt.clone()).powi(i as i64))
                .collect()
        })
        .collect();
    let b: Vec<T> = v
        .iter()
        .enumerate()
        .map(|(i, x)| x.clone() / lt.powi(i as i64))
        .collect();
    match phase_one(&a, &b, tol) {
        LpOutcome::Feasible(x) => LpOutcome::Feasible(x),
        LpOutcome::Infeasible(y) => {
            // Undo the scaling so the multipliers act on the raw monomials,
            // and negate so that the polynomial is nonnegative on the grid.
            LpOutcome::Infeasible(
                y.into_iter()
                    .enumerate()
                    .map(|(i, yi)| -(yi / lt.powi(i as i64)))
                    .collect(),
            )
        }
    }
}

fn check_moments<T: Scalar>(v: &[T]) -> Result<()> {
    if v.is_empty() {
        return domain("empty moment vector");
    }
    Ok(())
}

/// Decides whether power moments `v[0..=n]` come from a probability law on
/// `{0, ..., l}`. `v[0]` is the total mass.
///
/// The dual route minimizes the pairing over the extremal family, the primal
/// route solves the linear program. Exact mode returns an error if they
/// disagree; float mode reports `Marginal`. A zero minimum pairing counts as
/// feasible. When the family exceeds `cap` the linear program alone decides.
pub fn discrete_moment_feasible<T: Scalar>(v: &[T], l: u64, tol: f64, cap: u128) -> Result<Feasibility<T>> {
    check_moments(v)?;
    let n = v.len() - 1;
    if (n as u64) > l + 1 {
        return domain(format!("{} moments cannot be matched on {} points", n + 1, l + 1));
    }
    let lp = lp_moments(v, l, tol);
    let dual = match min_pairing(v, l, cap) {
        Ok(d) => d,
        Err(Error::EnumerationCap { .. }) => {
            return Ok(match lp {
                LpOutcome::Feasible(w) => Feasibility::Feasible { witness: w },
                LpOutcome::Infeasible(c) => {
                    let pairing = c.iter().zip(v).map(|(a, b)| a.clone() * b.clone()).sum();
                    Feasibility::InfeasibleLp { coefficients: c, pairing }
                }
            });
        }
        Err(e) => return Err(e),
    };
    let Some((cert, pairing)) = dual else {
        return Err(Error::Domain("empty extremal family".into()));
    };
    let scale = v.iter().fold(1.0f64, |s, x| s.max(x.to_f64().abs()));
    let sign = pairing.sign(tol * scale);
    match (sign, lp) {
        (Sign::Negative, LpOutcome::Infeasible(_)) => Ok(Feasibility::Infeasible { certificate: cert, pairing }),
        (Sign::Positive, LpOutcome::Feasible(w)) => Ok(Feasibility::Feasible { witness: w }),
        (Sign::Zero, LpOutcome::Feasible(w)) if T::EXACT => Ok(Feasibility::Feasible { witness: w }),
        (Sign::Zero, _) => Ok(Feasibility::Marginal { min_pairing: pairing }),
        (s, _) if T::EXACT => Err(Error::Inconsistent(format!(
            "minimum pairing sign {s:?} but the linear program disagrees"
        ))),
        _ => Ok(Feasibility::Marginal { min_pairing: pairing }),
    }
}

/// `max_{0 <= i < l} [(2i + 1) x - i(i + 1)]`, the lower boundary of the
/// degree-two moment region.
pub fn phi2<T: Scalar>(x: &T, l: u64) -> T {
    (0..l as i64)
        .map(|i| T::from_i64(2 * i + 1) * x.clone() - T::from_i64(i * (i + 1)))
        .reduce(|a, b| if b > a { b } else { a })
        .unwrap_or_else(T::zero)
}

/// Lower boundary of the third moment: `max_{1 <= i < l} [(2i+1) y - i(i+1) x]`.
pub fn phi3_lower<T: Scalar>(x: &T, y: &T, l: u64) -> Option<T> {
    (1..l as i64)
        .map(|i| T::from_i64(2 * i + 1) * y.clone() - T::from_i64(i * (i + 1)) * x.clone())
        .reduce(|a, b| if b > a { b } else { a })
}

/// Upper boundary of the third moment:
/// `min_{0 <= i < l-1} [i(i+1) l - (2il + i^2 + i + l) x + (l + 2i + 1) y]`.
pub fn phi3_upper<T: Scalar>(x: &T, y: &T, l: u64) -> Option<T> {
    let li = l as i64;
    (0..li - 1)
        .map(|i| {
            T::from_i64(i * (i + 1) * li) - T::from_i64(2 * i * li + i * i + i + li) * x.clone()
                + T::from_i64(li + 2 * i + 1) * y.clone()
        })
        .reduce(|a, b| if b < a { b } else { a })
}

/// Closed-form membership for `n = 2` and `n = 3` (moments normalized with
/// `v[0] = 1`). Returns the sign of the tightest constraint slack.
pub fn closed_form_region<T: Scalar>(v: &[T], l: u64, tol: f64) -> Result<Sign> {
    if v.len() < 3 || v.len() > 4 {
        return domain("closed-form region is available for n = 2 and n = 3 only");
    }
    if (v[0].clone() - T::one()).sign(tol) != Sign::Zero {
        return domain("closed-form region needs v[0] = 1");
    }
    let lt = T::from_i64(l as i64);
    let slacks: Vec<T> = if v.len() == 3 {
        vec![lt * v[1].clone() - v[2].clone(), v[2].clone() - phi2(&v[1], l)]
    } else {
        let mut s = vec![v[3].clone()];
        if let Some(lo) = phi3_lower(&v[1], &v[2], l) {
            s.push(v[3].clone() - lo);
        }
        if let Some(hi) = phi3_upper(&v[1], &v[2], l) {
            s.push(hi - v[3].clone());
        }
        s
    };
    let worst = slacks
        .into_iter()
        .reduce(|a, b| if b < a { b } else { a })
        .unwrap();
    Ok(worst.sign(tol))
}
