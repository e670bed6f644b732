//! Curie-Weiss and three-body mean-field models, the Isingization transform
//! and the Gaussian mixture representation of ferromagnetic Curie-Weiss
//! measures.
//!
//! The two-body model on `n` sites has configuration weight
//! `u[k] ∝ a^k b^{k(n-k)}`; with field `h` and coupling `J` this is
//! `a = e^{2h}`, `b = e^{-2J}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measure::{adjacent_log_convexity, CountDistribution};
use crate::quadrature::hermite_doubling;
use crate::scalar::{binom, ln_binomial, log_sum_exp, Scalar};

/// Curie-Weiss parameters in multiplicative form.
#[derive(Debug, Clone, PartialEq)]
pub struct CwParams<T> {
    pub n: usize,
    pub a: T,
    pub b: T,
}

impl<T: Scalar> CwParams<T> {
    pub fn new(n: usize, a: T, b: T) -> Result<Self> {
        if !a.is_positive() || !b.is_positive() {
            return domain("Curie-Weiss parameters a and b must be positive");
        }
        Ok(Self { n, a, b })
    }

    /// `(J, h)` with `a = e^{2h}`, `b = e^{-2J}`.
    pub fn to_jh(&self) -> (f64, f64) {
        (-self.b.to_f64().ln() / 2.0, self.a.to_f64().ln() / 2.0)
    }
}

impl CwParams<f64> {
    pub fn from_jh(n: usize, j: f64, h: f64) -> Self {
        Self { n, a: (2.0 * h).exp(), b: (-2.0 * j).exp() }
    }
}

/// Count distribution of the Curie-Weiss measure. Exact for rational `a, b`.
pub fn cw_measure<T: Scalar>(p: &CwParams<T>) -> CountDistribution<T> {
    let n = p.n as i64;
    if T::EXACT {
        let w: Vec<T> = (0..=n)
            .map(|k| binom::<T>(n, k) * p.a.powi(k) * p.b.powi(k * (n - k)))
            .collect();
        CountDistribution::from_weights(w).expect("positive weights")
    } else {
        let (la, lb) = (p.a.to_f64().ln(), p.b.to_f64().ln());
        let logs: Vec<f64> = (0..=n)
            .map(|k| ln_binomial(n as u64, k as u64) + k as f64 * la + (k * (n - k)) as f64 * lb)
            .collect();
        from_log_weights(&logs)
    }
}

/// Normalizes log-weights into a float count distribution.
pub fn from_log_weights<T: Scalar>(logs: &[f64]) -> CountDistribution<T> {
    let z = log_sum_exp(logs);
    let w: Vec<T> = logs
        .iter()
        .map(|l| T::from_f64((l - z).exp()).unwrap_or_else(T::zero))
        .collect();
    CountDistribution::from_weights(w).expect("positive weights")
}

/// Scaling of the pair and triple couplings with the number of sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `(1, 1)`
    Unit,
    /// `(n, n^2)`
    Linear,
    /// `(n^2, n^3)`
    Quadratic,
}

impl Scaling {
    pub fn factors(self, n: usize) -> (f64, f64) {
        let n = n as f64;
        match self {
            Scaling::Unit => (1.0, 1.0),
            Scaling::Linear => (n, n * n),
            Scaling::Quadratic => (n * n, n * n * n),
        }
    }
}

/// Three-body mean-field model with weight
/// `exp{h s + J2 s^2 / (2 σ2) + J3 s^3 / (6 σ3)}` per configuration, where
/// `s = 2k - n` is the magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBodyParams {
    pub n: usize,
    pub h: f64,
    pub j2: f64,
    pub j3: f64,
    pub scaling: Scaling,
}

pub fn three_body_measure(p: &ThreeBodyParams) -> CountDistribution<f64> {
    let (s2, s3) = p.scaling.factors(p.n);
    let n = p.n as i64;
    let logs: Vec<f64> = (0..=n)
        .map(|k| {
            let s = (2 * k - n) as f64;
            ln_binomial(n as u64, k as u64) + p.h * s + p.j2 / (2.0 * s2) * s * s + p.j3 / (6.0 * s3) * s * s * s
        })
        .collect();
    from_log_weights(&logs)
}

/// Four-site Hamiltonian written with explicit pair and triple sums:
/// `h Σσ_i + J2 Σ_{i<j} σ_i σ_j + J3 Σ_{i<j<k} σ_i σ_j σ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourSiteHamiltonian {
    pub h: f64,
    pub j2: f64,
    pub j3: f64,
}

impl FourSiteHamiltonian {
    /// Same measure in magnetization form. With `s = Σσ` on four sites,
    /// `Σ_{i<j} σσ = (s^2 - 4)/2` and `Σ_{i<j<k} σσσ = (s^3 - 10 s)/6`.
    pub fn to_three_body(self) -> ThreeBodyParams {
        ThreeBodyParams {
            n: 4,
            h: self.h - 5.0 * self.j3 / 3.0,
            j2: self.j2,
            j3: self.j3,
            scaling: Scaling::Unit,
        }
    }
}

/// Closed-form infinite extendibility test for the four-site three-body
/// model: `J2 >= 0` and `cosh(8 J3) <= cosh(4 J2) - 2 e^{-8 J2} sinh^2(2 J2)`.
/// The field does not enter. Evaluated in the cancellation-free form
/// `sinh^2(4 J3) <= sinh^2(2 J2) (1 - e^{-8 J2})`.
pub fn n4_three_body_ie(_h: f64, j2: f64, j3: f64) -> bool {
    if j2 < 0.0 {
        return false;
    }
    let lhs = (4.0 * j3).sinh().powi(2);
    let rhs = (2.0 * j2).sinh().powi(2) * -(-8.0 * j2).exp_m1();
    lhs <= rhs
}

/// Reweights `pi[k]` by `exp{h(2k - n) + (J/2)(2k - n)^2}` and renormalizes.
pub fn isingize(mu: &CountDistribution<f64>, j: f64, h: f64) -> CountDistribution<f64> {
    let n = mu.n() as i64;
    let logs: Vec<f64> = mu
        .pi()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let s = (2 * k as i64 - n) as f64;
            p.ln() + h * s + 0.5 * j * s * s
        })
        .collect();
    from_log_weights(&logs)
}

/// Exact Isingization in multiplicative form: `pi[k] a^k b^{k(n-k)}`, which
/// equals [`isingize`] with `a = e^{2h}`, `b = e^{-2J}`.
pub fn isingize_ab<T: Scalar>(mu: &CountDistribution<T>, a: &T, b: &T) -> Result<CountDistribution<T>> {
    if !a.is_positive() || !b.is_positive() {
        return domain("a and b must be positive");
    }
    let n = mu.n() as i64;
    let w = mu
        .pi()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let k = k as i64;
            p.clone() * a.powi(k) * b.powi(k * (n - k))
        })
        .collect();
    CountDistribution::from_weights(w)
}

/// Necessary condition for a de Finetti mixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogConvexity {
    Passes,
    /// First `k` with `u[k]^2 > u[k-1] u[k+1]` (including a zero `u[k±1]`
    /// next to a positive `u[k]`).
    Fails(usize),
    /// Float mode only: some second difference is within tolerance of zero.
    Marginal,
}

/// Second differences of `ln u[k]` must be nonnegative for any mixture of
/// i.i.d. laws (Cauchy-Schwarz on `E W^k (1-W)^{n-k}`).
pub fn log_convexity_necessary<T: Scalar>(mu: &CountDistribution<T>, tol: f64) -> LogConvexity {
    match adjacent_log_convexity(&mu.config_weights(), tol) {
        Err(k) => LogConvexity::Fails(k),
        Ok(true) => LogConvexity::Marginal,
        Ok(false) => LogConvexity::Passes,
    }
}

/// Configuration weights `u[k] = E W^k (1 - W)^{n-k}` of a ferromagnetic
/// Curie-Weiss measure computed from its mixture representation: `ξ` is
/// normal with mean `h` and variance `J`, tilted by `(2 cosh ξ)^n`, and
/// `W = e^ξ / (2 cosh ξ)`.
pub fn type1_normal_representation(j: f64, h: f64, n: usize, tol: f64) -> Result<Vec<f64>> {
    if j.is_nan() || j < 0.0 {
        return domain("mixture representation needs J >= 0");
    }
    let sd = j.sqrt();
    hermite_doubling(tol, |rule| {
        let mut log_tilt = Vec::with_capacity(rule.nodes.len());
        for (z, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = h + sd * z;
            // ln[(2 cosh x)^n]
            let l2c = x.abs() + (-2.0 * x.abs()).exp().ln_1p();
            log_tilt.push(w.ln() + n as f64 * l2c);
        }
        let norm = log_sum_exp(&log_tilt);
        (0..=n)
            .map(|k| {
                rule.nodes
                    .iter()
                    .zip(&log_tilt)
                    .map(|(z, lt)| {
                        let x = h + sd * z;
                        // ln W and ln(1 - W) for W = 1 / (1 + e^{-2x})
                        let lw = -(-2.0 * x).exp().ln_1p();
                        let l1w = -(2.0 * x).exp().ln_1p();
                        (lt - norm + k as f64 * lw + (n - k) as f64 * l1w).exp()
                    })
                    .sum()
            })
            .collect()
    })
}
