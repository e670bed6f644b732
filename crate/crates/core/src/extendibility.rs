//! Infinite and finite extendibility of exchangeable binary measures.
//!
//! * [`ie_check`] decides whether the measure is a mixture of i.i.d. laws via
//!   positivity of the two Hankel matrices of its head probabilities.
//! * [`l_extendible`] decides whether it is the marginal of an exchangeable
//!   law on `l` sites by turning the question into a moment problem on
//!   `{0, ..., l}`.
//! * [`small_case_oracle`] and the threshold helpers give closed forms for
//!   Curie-Weiss measures.

use num::{BigRational, Signed};
use serde::Serialize;

use crate::curie_weiss::{cw_measure, CwParams};
use crate::error::{domain, Error, Result};
use crate::linalg::{hankel_verdicts, leading_minor, stirling_matrices, Definiteness, HankelVariant, Matrix};
use crate::measure::{hypergeometric_project, is_product, CountDistribution};
use crate::moment::{discrete_moment_feasible, ExtremalPolynomial, Feasibility};
use crate::scalar::{falling_factorial, Scalar, Sign};

/// Grids used to confirm infinite extendibility on a singular Hankel
/// boundary.
pub const BOUNDARY_GRIDS: [u64; 3] = [64, 128, 256];

/// Evidence for a positive infinite extendibility verdict.
#[derive(Debug, Clone, PartialEq)]
pub enum IeWitness<T> {
    /// Both Hankel matrices are positive definite.
    StrictHankel,
    /// The measure is i.i.d. with this head probability.
    PointMass(T),
    /// A mixing law on `{0, 1/L, ..., 1}` matching all head probabilities.
    GridLaw { grid: u64, weights: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum IeVerdict<T> {
    Ie(IeWitness<T>),
    /// Which Hankel matrix (0 or 1) is indefinite.
    NotIe { matrix: usize },
    Marginal,
}

impl<T> IeVerdict<T> {
    pub fn label(&self) -> &'static str {
        match self {
            IeVerdict::Ie(_) => "IE",
            IeVerdict::NotIe { .. } => "NotIE",
            IeVerdict::Marginal => "Marginal",
        }
    }
}

/// Infinite extendibility test.
///
/// If either Hankel matrix is indefinite the measure is not a mixture of
/// i.i.d. laws; if both are positive definite it is. On the singular
/// boundary the verdict is `Ie` only if the measure is i.i.d. or its head
/// probabilities are matched by a law on each grid of [`BOUNDARY_GRIDS`];
/// otherwise `Marginal`.
pub fn ie_check<T: Scalar>(mu: &CountDistribution<T>, tol: f64) -> Result<IeVerdict<T>> {
    let v = mu.head_probabilities();
    let (a, b) = hankel_verdicts(&v, HankelVariant::Unit, tol);
    if a == Definiteness::Indefinite {
        return Ok(IeVerdict::NotIe { matrix: 0 });
    }
    if b == Definiteness::Indefinite {
        return Ok(IeVerdict::NotIe { matrix: 1 });
    }
    if a == Definiteness::PositiveDefinite && b == Definiteness::PositiveDefinite {
        return Ok(IeVerdict::Ie(IeWitness::StrictHankel));
    }
    if is_product(&v, tol) {
        return Ok(IeVerdict::Ie(IeWitness::PointMass(v.get(1).cloned().unwrap_or_else(T::zero))));
    }
    let mut last = None;
    for &grid in &BOUNDARY_GRIDS {
        let scaled: Vec<T> = v
            .iter()
            .enumerate()
            .map(|(k, x)| x.clone() * T::from_i64(grid as i64).powi(k as i64))
            .collect();
        match discrete_moment_feasible(&scaled, grid, tol, crate::moment::DEFAULT_CAP)? {
            Feasibility::Feasible { witness } => last = Some((grid, witness)),
            _ => return Ok(IeVerdict::Marginal),
        }
    }
    let (grid, weights) = last.expect("at least one grid");
    Ok(IeVerdict::Ie(IeWitness::GridLaw { grid, weights }))
}

/// Power moments `E N^p`, `p = 0..=n`, that the count `N` of an `l`-site
/// extension must have: factorial moments `(l)_k v[k]` converted with
/// Stirling numbers of the second kind.
pub fn extension_moment_targets<T: Scalar>(mu: &CountDistribution<T>, l: u64) -> Vec<T> {
    let v = mu.head_probabilities();
    let n = mu.n();
    let factorial: Vec<T> = v
        .iter()
        .enumerate()
        .map(|(k, x)| T::from_bigint(&falling_factorial(l as i64, k)) * x.clone())
        .collect();
    let (_, h) = stirling_matrices(n + 1);
    (0..=n)
        .map(|p| (0..=p).map(|k| T::from_bigint(&h[p][k]) * factorial[k].clone()).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtendVerdict<T> {
    /// Count distribution of an exchangeable law on `l` sites whose
    /// marginal is the input.
    Extendible { witness: CountDistribution<T> },
    NotExtendible { certificate: Certificate<T> },
    Marginal,
}

impl<T> ExtendVerdict<T> {
    pub fn label(&self) -> &'static str {
        match self {
            ExtendVerdict::Extendible { .. } => "Extendible",
            ExtendVerdict::NotExtendible { .. } => "NotExtendible",
            ExtendVerdict::Marginal => "Marginal",
        }
    }
    pub fn is_extendible(&self) -> bool {
        matches!(self, ExtendVerdict::Extendible { .. })
    }
}

/// Polynomial nonnegative on `{0, ..., l}` with negative expectation under
/// the target moments.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate<T> {
    Extremal { polynomial: ExtremalPolynomial, pairing: T },
    Lp { coefficients: Vec<T>, pairing: T },
}

impl<T: Scalar> Certificate<T> {
    pub fn pairing(&self) -> &T {
        match self {
            Certificate::Extremal { pairing, .. } | Certificate::Lp { pairing, .. } => pairing,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Certificate::Extremal { polynomial, pairing } => serde_json::json!({
                "kind": "extremal",
                "polynomial": polynomial,
                "pairing": pairing.to_json(),
            }),
            Certificate::Lp { coefficients, pairing } => serde_json::json!({
                "kind": "lp",
                "coefficients": coefficients.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                "pairing": pairing.to_json(),
            }),
        }
    }
}

/// Finite extendibility report.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendReport<T> {
    pub verdict: ExtendVerdict<T>,
    /// Target power moments of the count on `l` sites.
    pub targets: Vec<T>,
    /// `E N^2 - (E N)^2` of the targets (`None` for `n < 2`). A negative value
    /// is the order-one Hankel obstruction.
    pub variance: Option<T>,
}

/// Decides whether `mu` on `n` sites is the marginal of an exchangeable law
/// on `l >= n` sites, returning a witness extension or a polynomial
/// certificate.
pub fn l_extendible<T: Scalar>(mu: &CountDistribution<T>, l: u64, tol: f64, cap: u128) -> Result<ExtendReport<T>> {
    let n = mu.n();
    if l < n as u64 {
        return domain(format!("extension size l = {l} is below n = {n}"));
    }
    let targets = extension_moment_targets(mu, l);
    let variance = (n >= 2).then(|| targets[2].clone() - targets[1].clone() * targets[1].clone());
    if l == n as u64 {
        return Ok(ExtendReport {
            verdict: ExtendVerdict::Extendible { witness: mu.clone() },
            targets,
            variance,
        });
    }
    let verdict = match discrete_moment_feasible(&targets, l, tol, cap)? {
        Feasibility::Feasible { witness } => {
            let w = CountDistribution::new(witness, tol)?;
            let back = hypergeometric_project(&w, n)?;
            let gap = back.max_abs_diff(mu);
            if (T::EXACT && back != *mu) || (!T::EXACT && gap > 10.0 * tol * (n as f64 + 1.0)) {
                return Err(Error::Inconsistent(format!("witness projects back with error {gap:e}")));
            }
            ExtendVerdict::Extendible { witness: w }
        }
        Feasibility::Infeasible { certificate, pairing } => ExtendVerdict::NotExtendible {
            certificate: Certificate::Extremal { polynomial: certificate, pairing },
        },
        Feasibility::InfeasibleLp { coefficients, pairing } => ExtendVerdict::NotExtendible {
            certificate: Certificate::Lp { coefficients, pairing },
        },
        Feasibility::Marginal { .. } => ExtendVerdict::Marginal,
    };
    Ok(ExtendReport { verdict, targets, variance })
}

/// Pairs `(n, l)` covered by [`small_case_oracle`] besides `n = 2`.
pub const SMALL_CASES: [(usize, u64); 6] = [(2, 3), (2, 4), (2, 5), (3, 4), (3, 5), (4, 5)];

/// Largest `b` for which the `n = 2` Curie-Weiss measure with parameter `a`
/// is `l`-extendible (`l >= 3`):
/// `min_{1 <= i < l-1} [(l-i)/(2i) a + (i+1)/(2(l-i-1)) / a]`.
pub fn n2_threshold<T: Scalar>(a: &T, l: u64) -> Result<T> {
    if l < 3 {
        return domain("the n = 2 threshold formula needs l >= 3");
    }
    let l = l as i64;
    Ok((1..l - 1)
        .map(|i| T::from_ratio(l - i, 2 * i) * a.clone() + T::from_ratio(i + 1, 2 * (l - i - 1)) / a.clone())
        .reduce(|x, y| if y < x { y } else { x })
        .expect("nonempty range"))
}

/// Closed-form `l`-extendibility of the Curie-Weiss measure `(a, b)` for the
/// pairs in [`SMALL_CASES`] and for `n = 2` with any `l >= 3`. Exact for
/// rational inputs.
pub fn small_case_oracle<T: Scalar>(a: &T, b: &T, n: usize, l: u64) -> Result<bool> {
    if !a.is_positive() || !b.is_positive() {
        return domain("a and b must be positive");
    }
    // The measure with a and 1/a are mirror images.
    let a = if *a > T::one() { T::one() / a.clone() } else { a.clone() };
    let b = b.clone();
    let one = T::one();
    let t = |p: i64, q: i64| T::from_ratio(p, q);
    let ok = match (n, l) {
        (2, _) => b <= n2_threshold(&a, l)?,
        (3, 4) => a == one || b.clone() * b.clone() * a.clone() * (one.clone() - a.clone()) <= one,
        (3, 5) => {
            if a <= t(1, 2) {
                b.clone() * b.clone() * a.clone() * (t(2, 1) - t(3, 1) * a.clone()) <= one
            } else {
                b.clone() * b.clone() * a.clone() * (t(2, 1) - a.clone()) <= t(3, 1)
            }
        }
        (4, 5) => {
            // The quartic in b below has either no positive roots or two,
            // b1 <= b2, and is negative exactly between them.
            let f = a.powi(4) - a.powi(3) * b.powi(3) + a.powi(2) * b.powi(4) - a.clone() * b.powi(3) + one.clone();
            b <= a.clone() + one / a && f.sign(0.0) != Sign::Negative
        }
        _ => return domain(format!("no closed form for n = {n}, l = {l}")),
    };
    Ok(ok)
}

/// Literal table form of the `(2, l)` cases for `l = 3, 4, 5`, kept as a
/// second route next to [`n2_threshold`].
pub fn n2_table<T: Scalar>(a: &T, l: u64) -> Result<T> {
    let a = if *a > T::one() { T::one() / a.clone() } else { a.clone() };
    let one = T::one();
    Ok(match l {
        3 => a.clone() + one / a,
        4 => T::from_ratio(3, 2) * a.clone() + T::from_ratio(1, 2) / a,
        5 => {
            if T::from_i64(3) * a.clone() * a.clone() <= one {
                T::from_i64(2) * a.clone() + one / (T::from_i64(3) * a)
            } else {
                T::from_ratio(3, 4) * (a.clone() + one / a)
            }
        }
        _ => return domain("table covers l = 3, 4, 5"),
    })
}

/// Critical coupling `c` in `b = 1 + c/l` at density `rho`: `1 / (2 rho (1 - rho))`.
pub fn c_crit(rho: f64) -> f64 {
    1.0 / (2.0 * rho * (1.0 - rho))
}

/// Sufficient bound for `l`-extendibility at `n = 2`:
/// `b <= 1 + (1 + a)^2 / (2 a (l - 1))`.
pub fn n2_sufficient(a: f64, l: u64) -> f64 {
    1.0 + (1.0 + a).powi(2) / (2.0 * a * (l as f64 - 1.0))
}

/// Sufficient condition for `l`-extendibility at `n = 3`. Returns `None`
/// when `l` is too small for the bound to apply.
pub fn n3_sufficient(a: f64, b: f64, l: u64) -> Option<bool> {
    let lm = l as f64 - 2.0;
    let need = (a * a + b * b).max(1.0 + a * a * b * b) / (2.0 * a * b * b);
    if lm < need {
        return None;
    }
    let num = (a + b).powi(2).min((1.0 + a * b).powi(2));
    Some(b <= 1.0 + num / (2.0 * a * b * lm))
}

/// Second-order critical constant at density `rho = j/k` (lowest terms) for
/// `l ≡ q (mod k)`: `(rho(1-rho) + (m/k)^2) / (2 rho^2 (1-rho)^2)` where
/// `m ∈ [0, k/2]` satisfies `j q ≡ ±m (mod k)`.
pub fn d_c(j: u64, k: u64, q: u64) -> Result<f64> {
    if j == 0 || j >= k {
        return domain("need 0 < j < k");
    }
    if num::integer::gcd(j, k) != 1 {
        return domain(format!("{j}/{k} is not in lowest terms"));
    }
    let r = (j * (q % k)) % k;
    let m = (0..=k / 2)
        .find(|&m| r == m || r == (k - m) % k)
        .expect("some residue matches");
    let rho = j as f64 / k as f64;
    let v = rho * (1.0 - rho);
    Ok((v + (m as f64 / k as f64).powi(2)) / (2.0 * v * v))
}

/// Exact Curie-Weiss measure at density `rho` (so `a = rho / (1 - rho)`)
/// and coupling `b = 1 + c / l`.
pub fn scaled_cw(n: usize, rho: &BigRational, c: &BigRational, l: u64) -> Result<CountDistribution<BigRational>> {
    if !rho.is_positive() || *rho >= BigRational::from_i64(1) {
        return domain("rho must lie in (0, 1)");
    }
    let one = BigRational::from_i64(1);
    let a = rho.clone() / (one.clone() - rho.clone());
    let b = one + c.clone() / BigRational::from_i64(l as i64);
    Ok(cw_measure(&CwParams::new(n, a, b)?))
}

/// Centered moment `sum_m C(p, m) (-rho l)^{p-m} v_m` of the extension
/// targets, i.e. `E (N - rho l)^p`.
pub fn centered_moment<T: Scalar>(targets: &[T], rho: &T, l: u64, p: usize) -> T {
    let shift = -(rho.clone() * T::from_i64(l as i64));
    (0..=p)
        .map(|m| crate::scalar::binom::<T>(p as i64, m as i64) * shift.powi((p - m) as i64) * targets[m].clone())
        .sum()
}

/// Hankel matrix `(targets[i + j])` of the extension targets.
pub fn target_hankel<T: Scalar>(targets: &[T]) -> Matrix<T> {
    let m = (targets.len() - 1) / 2;
    (0..=m)
        .map(|i| (0..=m).map(|j| targets[i + j].clone()).collect())
        .collect()
}

/// Normal-regime diagnostics at `b = 1 + c/l`: for each `k` the ratio of the
/// order-`k+1` leading Hankel minor to `[δ ρ(1-ρ) l]^{k(k+1)/2}` (expected
/// limit `prod_{j<=k} j!`), and for each `p` the centered moment divided by
/// `[δ ρ(1-ρ) l]^{p/2}` (expected limit `(p-1)!!` for even `p`, zero for odd
/// `p`). Here `δ = 1 - 2 c ρ(1-ρ)`.
#[derive(Debug, Clone, Serialize)]
pub struct NormalRegime {
    pub l: u64,
    pub delta: f64,
    pub minor_ratios: Vec<f64>,
    pub centered_ratios: Vec<f64>,
}

pub fn normal_regime(n: usize, rho: &BigRational, c: &BigRational, l: u64) -> Result<NormalRegime> {
    let mu = scaled_cw(n, rho, c, l)?;
    let targets = extension_moment_targets(&mu, l);
    let r = rho.to_f64();
    let delta = 1.0 - 2.0 * c.to_f64() * r * (1.0 - r);
    let unit = delta * r * (1.0 - r) * l as f64;
    let hk = target_hankel(&targets);
    let minor_ratios = (0..hk.len())
        .map(|k| {
            let minor = leading_minor(&hk, k + 1);
            minor.to_f64() / unit.powf((k * (k + 1)) as f64 / 2.0)
        })
        .collect();
    let centered_ratios = (0..=n)
        .map(|p| centered_moment(&targets, rho, l, p).to_f64() / unit.powf(p as f64 / 2.0))
        .collect();
    Ok(NormalRegime { l, delta, minor_ratios, centered_ratios })
}

/// Second-order diagnostic at criticality: with
/// `b = 1 + 1/(2ρ(1-ρ)l) + d/l^2`, reports the centered moments `E_p` for
/// `p = 2, 3, 4` and whether Schwarz's inequality `E_3^2 <= E_2 E_4` holds.
#[derive(Debug, Clone, Serialize)]
pub struct SchwarzReport {
    pub l: u64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub holds: bool,
}

pub fn schwarz_diagnostic(rho: &BigRational, d: &BigRational, l: u64) -> Result<SchwarzReport> {
    let one = BigRational::from_i64(1);
    let two = BigRational::from_i64(2);
    let lq = BigRational::from_i64(l as i64);
    let c = one.clone() / (two * rho.clone() * (one - rho.clone())) + d.clone() / lq;
    let mu = scaled_cw(4, rho, &c, l)?;
    let targets = extension_moment_targets(&mu, l);
    let e: Vec<BigRational> = (2..=4).map(|p| centered_moment(&targets, rho, l, p)).collect();
    let holds = e[1].clone() * e[1].clone() <= e[0].clone() * e[2].clone();
    Ok(SchwarzReport {
        l,
        e2: e[0].to_f64(),
        e3: e[1].to_f64(),
        e4: e[2].to_f64(),
        holds,
    })
}

/// `prod_{j=0}^{k} j!`
pub fn superfactorial(k: usize) -> f64 {
    (0..=k).map(|j| (1..=j).map(|i| i as f64).product::<f64>()).product()
}

/// `(p - 1)!!` for even `p`, with `(-1)!! = 1`.
pub fn double_factorial_odd(p: usize) -> f64 {
    (1..p).step_by(2).map(|i| i as f64).product()
}

impl<T: Scalar> ExtendReport<T> {
    /// True when the order-one Hankel obstruction `Var N < 0` is present.
    pub fn variance_negative(&self) -> bool {
        self.variance.as_ref().is_some_and(|v| v.sign(0.0) == Sign::Negative && !v.is_zero())
    }
}
