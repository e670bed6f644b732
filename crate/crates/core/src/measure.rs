//! Exchangeable measures on `{0,1}^n`, stored by their count distribution.
//!
//! An exchangeable measure is determined by `pi[k]`, the probability of seeing
//! exactly `k` ones. Three equivalent coordinates are used throughout:
//!
//! * `pi[k]`, the count distribution;
//! * `u[k] = pi[k] / C(n, k)`, the probability of one fixed configuration with
//!   `k` ones;
//! * `v[k]`, the probability that `k` fixed sites all equal one. For a de
//!   Finetti mixture these are the moments `E W^k`.

use std::fmt;

use num::BigRational;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{domain, Error, Result};
use crate::scalar::{binom, binomial, falling_factorial, ln_binomial, Scalar, Sign};

/// Probability vector `pi[0..=n]` over the number of ones.
#[derive(Clone, PartialEq)]
pub struct CountDistribution<T> {
    n: usize,
    pi: Vec<T>,
}

impl<T: Scalar> CountDistribution<T> {
    /// Validates nonnegativity and unit mass. Float inputs are checked against
    /// `tol * (n + 1)`.
    pub fn new(pi: Vec<T>, tol: f64) -> Result<Self> {
        if pi.is_empty() {
            return domain("count distribution needs at least one entry");
        }
        let n = pi.len() - 1;
        let slack = tol * (n as f64 + 1.0);
        for (k, p) in pi.iter().enumerate() {
            if p.sign(slack) == Sign::Negative {
                return domain(format!("pi[{k}] = {p} is negative"));
            }
        }
        let total: T = pi.iter().cloned().sum();
        if (total - T::one()).sign(slack) != Sign::Zero {
            return domain("count distribution does not sum to one");
        }
        Ok(Self { n, pi })
    }

    /// Normalizes a nonnegative weight vector.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        if weights.iter().any(|w| w.is_negative()) {
            return domain("negative weight");
        }
        let total: T = weights.iter().cloned().sum();
        if total.is_zero() {
            return domain("all weights are zero");
        }
        let pi = weights.into_iter().map(|w| w / total.clone()).collect::<Vec<_>>();
        Ok(Self { n: pi.len() - 1, pi })
    }

    /// Builds the measure from per-configuration weights `u[k]`, normalizing.
    pub fn from_config_weights(u: &[T]) -> Result<Self> {
        let n = u.len() as i64 - 1;
        let w = u
            .iter()
            .enumerate()
            .map(|(k, x)| binom::<T>(n, k as i64) * x.clone())
            .collect();
        Self::from_weights(w)
    }

    /// Builds the measure from head probabilities `v[0..=n]`.
    pub fn from_head_probabilities(v: &[T], tol: f64) -> Result<Self> {
        let u = v_to_u(v);
        let n = v.len() as i64 - 1;
        let pi = u
            .iter()
            .enumerate()
            .map(|(k, x)| binom::<T>(n, k as i64) * x.clone())
            .collect();
        Self::new(pi, tol)
    }

    /// Product of `n` Bernoulli(`p`) coordinates.
    pub fn product(n: usize, p: T) -> Self {
        let q = T::one() - p.clone();
        let pi = (0..=n)
            .map(|k| binom::<T>(n as i64, k as i64) * p.powi(k as i64) * q.powi((n - k) as i64))
            .collect();
        Self { n, pi }
    }

    /// Uniform count distribution on `{0, ..., n}`.
    pub fn uniform(n: usize) -> Self {
        let w = T::one() / T::from_i64(n as i64 + 1);
        Self { n, pi: vec![w; n + 1] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[T] {
        &self.pi
    }

    /// Per-configuration weights `u[k] = pi[k] / C(n, k)`.
    pub fn config_weights(&self) -> Vec<T> {
        let n = self.n as i64;
        self.pi
            .iter()
            .enumerate()
            .map(|(k, p)| p.clone() / binom::<T>(n, k as i64))
            .collect()
    }

    /// Head probabilities `v[k]`, `k = 0..=n`.
    pub fn head_probabilities(&self) -> Vec<T> {
        u_to_v(&self.config_weights())
    }

    /// Converts every entry to another scalar type.
    pub fn map<S: Scalar>(&self, f: impl Fn(&T) -> S) -> CountDistribution<S> {
        CountDistribution {
            n: self.n,
            pi: self.pi.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> CountDistribution<f64> {
        self.map(|x| x.to_f64())
    }

    /// Mirror image `k -> n - k`.
    pub fn flipped(&self) -> Self {
        let mut pi = self.pi.clone();
        pi.reverse();
        Self { n: self.n, pi }
    }

    /// Largest absolute entrywise difference, in `f64`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.pi
            .iter()
            .zip(&other.pi)
            .map(|(a, b)| (a.clone() - b.clone()).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

impl CountDistribution<BigRational> {
    /// Exact `f64 -> rational` lift of a float measure, renormalized.
    pub fn from_f64_exact(mu: &CountDistribution<f64>) -> Result<Self> {
        let w = mu
            .pi
            .iter()
            .map(|x| BigRational::from_float(*x).ok_or_else(|| Error::Domain(format!("non-finite weight {x}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_weights(w)
    }
}

impl<T: fmt::Debug> fmt::Debug for CountDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CountDistribution(n={}, pi=[", self.n)?;
        for (i, p) in self.pi.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p:?}")?;
        }
        write!(f, "])")
    }
}

impl<T: Scalar> Serialize for CountDistribution<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CountDistribution", 2)?;
        st.serialize_field("n", &self.n)?;
        let pi: Vec<Value> = self.pi.iter().map(Scalar::to_json).collect();
        st.serialize_field("pi", &pi)?;
        st.end()
    }
}

impl<'de, T: Scalar> Deserialize<'de> for CountDistribution<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            pi: Vec<Value>,
        }
        let raw = Raw::deserialize(d)?;
        if raw.pi.len() != raw.n + 1 {
            return Err(de::Error::custom(format!(
                "pi has {} entries, expected n + 1 = {}",
                raw.pi.len(),
                raw.n + 1
            )));
        }
        let pi = raw
            .pi
            .iter()
            .map(T::from_json)
            .collect::<Result<Vec<_>>>()
            .map_err(de::Error::custom)?;
        let tol = if T::EXACT { 0.0 } else { crate::scalar::DEFAULT_TOL };
        CountDistribution::new(pi, tol).map_err(de::Error::custom)
    }
}

/// `v[k] = sum_j C(n-k, j) u[k+j]`.
pub fn u_to_v<T: Scalar>(u: &[T]) -> Vec<T> {
    let n = u.len() as i64 - 1;
    (0..=n)
        .map(|k| {
            (0..=n - k)
                .map(|j| binom::<T>(n - k, j) * u[(k + j) as usize].clone())
                .sum()
        })
        .collect()
}

/// Inverse of [`u_to_v`]: `u[k] = sum_j (-1)^j C(n-k, j) v[k+j]`.
pub fn v_to_u<T: Scalar>(v: &[T]) -> Vec<T> {
    let n = v.len() as i64 - 1;
    (0..=n)
        .map(|k| {
            (0..=n - k)
                .map(|j| {
                    let t = binom::<T>(n - k, j) * v[(k + j) as usize].clone();
                    if j % 2 == 0 {
                        t
                    } else {
                        -t
                    }
                })
                .sum()
        })
        .collect()
}

/// Weight `C(n,m) C(l-n, m'-m) / C(l, m')` of drawing `m` ones among `n`
/// sites when `m'` of the `l` sites are ones.
pub fn hypergeometric_weight<T: Scalar>(l: usize, n: usize, m: usize, mp: usize) -> T {
    if m > mp || mp - m > l - n || m > n {
        return T::zero();
    }
    let (l, n, m, mp) = (l as i64, n as i64, m as i64, mp as i64);
    if T::EXACT {
        T::from_rational(&BigRational::new(
            binomial(n, m) * binomial(l - n, mp - m),
            binomial(l, mp),
        ))
    } else {
        let lw = ln_binomial(n as u64, m as u64) + ln_binomial((l - n) as u64, (mp - m) as u64)
            - ln_binomial(l as u64, mp as u64);
        T::from_f64(lw.exp()).unwrap_or_else(T::zero)
    }
}

/// Marginal on the first `n` sites of an exchangeable measure on `l` sites.
pub fn hypergeometric_project<T: Scalar>(mu: &CountDistribution<T>, n: usize) -> Result<CountDistribution<T>> {
    let l = mu.n;
    if n > l {
        return domain(format!("cannot project {l} sites onto {n}"));
    }
    let pi = (0..=n)
        .map(|m| {
            (m..=m + (l - n))
                .map(|mp| hypergeometric_weight::<T>(l, n, m, mp) * mu.pi[mp].clone())
                .sum()
        })
        .collect();
    Ok(CountDistribution { n, pi })
}

/// Factorial moments `E[(N)_k]`, `k = 0..=order`, of a distribution `q` on
/// `{0, ..., l}`.
pub fn factorial_moments<T: Scalar>(q: &[T], order: usize) -> Vec<T> {
    (0..=order)
        .map(|k| {
            q.iter()
                .enumerate()
                .map(|(j, w)| T::from_bigint(&falling_factorial(j as i64, k)) * w.clone())
                .sum()
        })
        .collect()
}

/// Power moments `E[N^k]`, `k = 0..=order`.
pub fn power_moments<T: Scalar>(q: &[T], order: usize) -> Vec<T> {
    (0..=order)
        .map(|k| {
            q.iter()
                .enumerate()
                .map(|(j, w)| T::from_i64(j as i64).powi(k as i64) * w.clone())
                .sum()
        })
        .collect()
}

/// Outcome of the lattice condition test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FkgVerdict {
    Satisfied,
    /// First level `k` with `u[k]^2 > u[k-1] u[k+1]`.
    Violated(usize),
    /// Float mode only: some level is within tolerance of equality.
    Marginal,
}

/// Three-way comparison of `w[k]^2` against `w[k-1] w[k+1]`, with zeros
/// handled exactly. Returns the first failing `k` or whether any level sat
/// inside the tolerance band.
pub(crate) fn adjacent_log_convexity<T: Scalar>(w: &[T], tol: f64) -> std::result::Result<bool, usize> {
    let mut marginal = false;
    for k in 1..w.len().saturating_sub(1) {
        let (a, b, c) = (&w[k - 1], &w[k], &w[k + 1]);
        if b.is_zero() {
            continue;
        }
        if a.is_zero() || c.is_zero() {
            return Err(k);
        }
        let s = if T::EXACT {
            (a.clone() * c.clone() - b.clone() * b.clone()).sign(0.0)
        } else {
            let d = a.to_f64().ln() + c.to_f64().ln() - 2.0 * b.to_f64().ln();
            d.sign(tol)
        };
        match s {
            Sign::Negative => return Err(k),
            Sign::Zero if !T::EXACT => marginal = true,
            _ => {}
        }
    }
    Ok(marginal)
}

/// Lattice (FKG) condition for an exchangeable measure. For exchangeable
/// weights the pairwise condition over `{0,1}^n` reduces to
/// `u[k]^2 <= u[k-1] u[k+1]` for `1 <= k <= n-1`, with zero weights taken
/// literally.
pub fn fkg_lattice_check<T: Scalar>(mu: &CountDistribution<T>, tol: f64) -> FkgVerdict {
    match adjacent_log_convexity(&mu.config_weights(), tol) {
        Err(k) => FkgVerdict::Violated(k),
        Ok(true) => FkgVerdict::Marginal,
        Ok(false) => FkgVerdict::Satisfied,
    }
}

/// Sum of the entries, useful for diagnostics.
pub fn total_mass<T: Scalar>(mu: &CountDistribution<T>) -> T {
    mu.pi.iter().cloned().sum()
}

/// True if `pi` is exactly the product measure with head probability `v[1]`.
pub fn is_product<T: Scalar>(v: &[T], tol: f64) -> bool {
    if v.len() < 2 {
        return true;
    }
    let p = v[1].clone();
    let mut pk = T::one();
    for x in v {
        if (x.clone() - pk.clone()).sign(tol) != Sign::Zero {
            return false;
        }
        pk = pk * p.clone();
    }
    true
}
