//! Explicit signed extension of the antiferromagnetic Curie-Weiss model and
//! the large-`l` positivity machinery around it.
//!
//! For coupling `-J` (`J > 0`) and field `h >= 0` on `n` sites, the vector
//! `Q` on `{0, ..., l}` given by an alternating Gaussian series projects
//! hypergeometrically onto the `n`-site count distribution. Whenever `Q >= 0`
//! it is an explicit `l`-extension.

use num::complex::Complex64;
use num::{BigInt, BigRational};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::fixed::{exp_fixed, scaled_log};
use crate::measure::hypergeometric_weight;
use crate::quadrature::integrate;
use crate::scalar::{ln_binomial, log_sum_exp};

/// Cap on series terms per entry.
pub const MAX_TERMS: usize = 2_000_000;

/// Smallest field accepted by the direct oscillatory integral.
pub const H_MIN: f64 = 1e-3;

/// Normalization `sum_k C(n,k) exp(-(J/2)(2k-n)^2 + h(2k-n))`.
pub fn z_n(n: usize, j: f64, h: f64) -> Result<f64> {
    check_j(j)?;
    Ok(ln_z_n(n, j, h).exp())
}

fn ln_z_n(n: usize, j: f64, h: f64) -> f64 {
    let logs: Vec<f64> = (0..=n)
        .map(|k| {
            let s = 2.0 * k as f64 - n as f64;
            ln_binomial(n as u64, k as u64) - 0.5 * j * s * s + h * s
        })
        .collect();
    log_sum_exp(&logs)
}

fn check_j(j: f64) -> Result<()> {
    if !(j > 0.0 && j.is_finite()) {
        return domain(format!("coupling J must be positive and finite, got {j}"));
    }
    Ok(())
}

/// Signed extension vector with per-entry error bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QVector {
    pub n: usize,
    pub l: usize,
    pub coupling: f64,
    pub field: f64,
    pub q: Vec<f64>,
    /// `ln |Q(j)|`, finite even where `Q(j)` underflows.
    pub ln_abs: Vec<f64>,
    /// Sign of `Q(j)` as `-1`, `0` or `1`.
    pub sign: Vec<i8>,
    /// Certified bound on the truncated series tail, in units of `Q`.
    pub tail_bound: Vec<f64>,
    /// Bound on fixed-point rounding, in units of `Q`.
    pub rounding_bound: Vec<f64>,
    /// Series terms used per entry.
    pub terms: Vec<usize>,
}

impl QVector {
    pub fn sum(&self) -> f64 {
        let mut s = 0.0;
        let mut c = 0.0;
        for &x in &self.q {
            let t = s + x;
            c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            s = t;
        }
        s + c
    }

    pub fn min(&self) -> f64 {
        self.q.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `(j, Q(j))` of the smallest entry.
    pub fn argmin(&self) -> (usize, f64) {
        self.q
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, &x)| if x < acc.1 { (j, x) } else { acc })
    }

    /// Hypergeometric projection onto `{0, ..., n}` of the signed vector.
    pub fn projection(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|k| {
                (0..=self.l)
                    .map(|j| hypergeometric_weight::<f64>(self.l, self.n, k, j) * self.q[j])
                    .sum()
            })
            .collect()
    }

    /// Whether every entry is resolved as strictly positive, including
    /// entries below the float range.
    pub fn all_positive(&self) -> bool {
        self.sign.iter().all(|&s| s > 0)
    }

    /// Largest per-entry error bound.
    pub fn max_error(&self) -> f64 {
        self.tail_bound
            .iter()
            .zip(&self.rounding_bound)
            .fold(0.0f64, |m, (a, b)| m.max(a + b))
    }

    /// CSV with header `j,Q,tail_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,Q,tail_bound\n");
        for (j, (q, t)) in self.q.iter().zip(&self.tail_bound).enumerate() {
            out.push_str(&format!("{j},{q:e},{t:e}\n"));
        }
        out
    }
}

/// Evaluates the signed extension of the Curie-Weiss model with coupling
/// `-J` and field `h` from `n` to `l` sites.
///
/// Each entry sums `sum_m (-1)^m C(M+m-1, m) exp(-h s_m - J s_m^2/2)` with
/// `M = l - n` and `s_m = 2m + 2l - n - 2j`. Terms can be many orders of
/// magnitude above the result, so ratios of consecutive terms are
/// accumulated in fixed point at a precision chosen from a float pre-scan;
/// only the positive prefactor is taken in floating point. Summation stops
/// once the term ratio is at most `1/2` (it is decreasing in `m`) and twice
/// the next term is below `tol * 2^-20 * min(1, |Q(j)|)`; the reported tail
/// bound is twice the first omitted term.
pub fn q_extension(n: usize, l: usize, j: f64, h: f64, tol: f64) -> Result<QVector> {
    check_j(j)?;
    if !(h >= 0.0 && h.is_finite()) {
        return domain(format!("field h must be finite and nonnegative, got {h}"));
    }
    if l <= n {
        return domain(format!("need l > n, got l = {l}, n = {n}"));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let ln_z = ln_z_n(n, j, h);
    let entries: Vec<QEntry> = (0..=l)
        .into_par_iter()
        .map(|jj| q_entry(n, l, j, h, jj, ln_z, tol))
        .collect::<Result<_>>()?;
    Ok(QVector {
        n,
        l,
        coupling: j,
        field: h,
        q: entries.iter().map(|e| e.value).collect(),
        ln_abs: entries.iter().map(|e| e.ln_abs).collect(),
        sign: entries.iter().map(|e| e.sign).collect(),
        tail_bound: entries.iter().map(|e| e.tail).collect(),
        rounding_bound: entries.iter().map(|e| e.rounding).collect(),
        terms: entries.iter().map(|e| e.terms).collect(),
    })
}

struct QEntry {
    value: f64,
    ln_abs: f64,
    sign: i8,
    tail: f64,
    rounding: f64,
    terms: usize,
}

/// Evaluates with absolute target `tol * 2^-20`, then re-evaluates with the
/// target scaled by `|Q(j)|` until small entries are resolved to relative
/// accuracy as well.
fn q_entry(n: usize, l: usize, j: f64, h: f64, jj: usize, ln_z: f64, tol: f64) -> Result<QEntry> {
    let base = tol.ln() - 20.0 * std::f64::consts::LN_2;
    let mut e = q_entry_at(n, l, j, h, jj, ln_z, base)?;
    for _ in 0..4 {
        if e.sign == 0 || e.ln_abs >= 0.0 {
            break;
        }
        let next = q_entry_at(n, l, j, h, jj, ln_z, base + e.ln_abs - 2.0)?;
        let settled = next.sign == e.sign && (next.ln_abs - e.ln_abs).abs() < 1e-3;
        e = next;
        if settled {
            break;
        }
    }
    Ok(e)
}

fn q_entry_at(n: usize, l: usize, j: f64, h: f64, jj: usize, ln_z: f64, ln_target: f64) -> Result<QEntry> {
    let big_m = (l - n) as f64;
    let s0 = 2 * l as i64 - n as i64 - 2 * jj as i64;
    let s0f = s0 as f64;
    let ln_pref = ln_binomial(l as u64, jj as u64) - h * s0f - 0.5 * j * s0f * s0f - ln_z;
    let ratio = |m: usize| {
        let mf = m as f64;
        (big_m + mf) / (mf + 1.0) * (-2.0 * h - 2.0 * j * (s0f + 2.0 * mf + 1.0)).exp()
    };

    // Float pre-scan: number of terms and the largest term relative to the
    // first one.
    let mut log_r = 0.0f64;
    let mut max_log_r = 0.0f64;
    let mut stop = None;
    for m in 0..MAX_TERMS {
        let r = ratio(m);
        let next = log_r + r.ln();
        if r <= 0.5 && ln_pref + next + std::f64::consts::LN_2 <= ln_target {
            stop = Some(m);
            break;
        }
        log_r = next;
        max_log_r = max_log_r.max(log_r);
    }
    let Some(last) = stop else {
        return Err(Error::NonConvergence(format!(
            "series for Q({jj}) needs more than {MAX_TERMS} terms"
        )));
    };

    let ln2 = std::f64::consts::LN_2;
    let count = (last + 2) as f64;
    let abs_bits = ((ln_pref - ln_target) / ln2).ceil().max(0.0) + 2.0 * count.log2() + 16.0;
    let bits = (abs_bits + (max_log_r / ln2).ceil() + 64.0).max(96.0) as u32;
    let gbits = bits + 32;

    let rat = |x: f64| BigRational::from_float(x).expect("finite");
    let jr = rat(j);
    let hr = rat(h);
    let two = BigRational::from_integer(2.into());
    let g0_exp = -(&two * &hr) - &two * &jr * BigRational::from_integer(BigInt::from(s0 + 1));
    let mut g = exp_fixed(&g0_exp, gbits);
    let d = exp_fixed(&(-(BigRational::from_integer(4.into()) * &jr)), gbits);

    let mut term = BigInt::from(1) << bits;
    let mut sum = term.clone();
    for m in 0..=last {
        let mf = BigInt::from(l - n + m);
        term = ((&term * mf / BigInt::from(m + 1)) * &g) >> gbits;
        g = (&g * &d) >> gbits;
        if m < last {
            if m % 2 == 0 {
                sum -= &term;
            } else {
                sum += &term;
            }
        }
    }
    let tail = match scaled_log(&term, bits) {
        Some((lt, _)) => 2.0 * (ln_pref + lt).exp(),
        None => 0.0,
    };
    let (ln_abs, sign) = match scaled_log(&sum, bits) {
        Some((ls, neg)) => (ln_pref + ls, if neg { -1 } else { 1 }),
        None => (f64::NEG_INFINITY, 0),
    };
    let value = sign as f64 * ln_abs.exp();
    let ln_round = ln_pref + 2.0 * count.ln() + max_log_r + (-max_log_r).exp().ln_1p() + (2.0 - bits as f64) * ln2;
    Ok(QEntry { value, ln_abs, sign, tail, rounding: ln_round.exp(), terms: last + 1 })
}

/// A quadrature value with its error estimate. `imag` is the imaginary part
/// left over by the quadrature of a real quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadValue {
    pub value: f64,
    pub imag: f64,
    pub error: f64,
}

/// Half-width beyond which `log_mag` stays 45 below its maximum, scanning
/// `[0, hi]`. Returns the maximum as well.
fn window(log_mag: &dyn Fn(f64) -> f64, hi: f64) -> (f64, f64) {
    let steps = 4000;
    let vals: Vec<f64> = (0..=steps).map(|i| log_mag(hi * i as f64 / steps as f64)).collect();
    let k = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last = vals.iter().rposition(|&v| v >= k - 45.0).unwrap_or(0);
    (((last + 1) as f64 * hi / steps as f64).min(hi), k)
}

/// Integrates the symmetric-window complex integrand `exp(log_f(x) - k)` on
/// `[-w, w]` and verifies by repeating on a window one third wider.
fn verified_integral(log_f: &(dyn Fn(f64) -> Complex64 + Sync), w: f64, k: f64) -> Result<(Complex64, f64)> {
    let f = |x: f64| (log_f(x) - k).exp();
    let (a, ea) = integrate(&f, -w, w, 1e-15, 1e-13, 50_000)?;
    let (b, eb) = integrate(&f, -4.0 * w / 3.0, 4.0 * w / 3.0, 1e-15, 1e-13, 50_000)?;
    Ok((b, ea.max(eb) + (a - b).norm()))
}

/// `Q(j)` from its defining oscillatory integral
/// `C(l,j)/Z_n * int e^{(ix+h)(2j-l)} (2 cosh(ix+h))^{n-l} f_J(x) dx`,
/// `f_J` the centered normal density of variance `J`. Independent of the
/// series in [`q_extension`].
pub fn tilde_q_integral(n: usize, l: usize, j: f64, h: f64, jj: usize) -> Result<QuadValue> {
    check_j(j)?;
    if !(h >= H_MIN) {
        return domain(format!("field h = {h} is below {H_MIN}; the contour passes too close to a pole"));
    }
    if jj > l {
        return domain(format!("j = {jj} exceeds l = {l}"));
    }
    let u = 2.0 * jj as f64 - l as f64;
    let big_m = l as f64 - n as f64;
    let log_f = move |x: f64| {
        let z = Complex64::new(h, x);
        z * u - big_m * (z.cosh() * 2.0).ln() - x * x / (2.0 * j)
    };
    let bound = u * h - big_m * (2.0 * h.sinh()).ln();
    let (w0, k) = window(&|x: f64| log_f(x).re, (2.0 * j * (bound.abs() + 200.0)).sqrt() + 1.0);
    let (z, err) = verified_integral(&log_f, w0.max(1e-3), k)?;
    let scale = (k + ln_binomial(l as u64, jj as u64) - ln_z_n(n, j, h)
        - 0.5 * (2.0 * std::f64::consts::PI * j).ln())
    .exp();
    Ok(QuadValue { value: z.re * scale, imag: z.im * scale, error: err * scale })
}

/// `Q(j)` with the contour moved from real part `h` to real part `chi > 0`:
/// `C(l,j)/Z_n * e^{chi u + (h-chi)^2/(2J)} (2 cosh chi)^{-M}
///  * int e^{iy(u - (h-chi)/J)} (p e^{iy} + q e^{-iy})^{-M} f_J(y) dy`
/// with `u = 2j - l`, `p = e^chi / (2 cosh chi)`, `q = 1 - p`. No pole lies
/// between the two contours, so this also covers `h = 0`.
pub fn shifted_q(n: usize, l: usize, j: f64, h: f64, jj: usize, chi: f64) -> Result<QuadValue> {
    check_j(j)?;
    if !(chi > 0.0) || !(h >= 0.0) {
        return domain("need chi > 0 and h >= 0");
    }
    if jj > l {
        return domain(format!("j = {jj} exceeds l = {l}"));
    }
    let u = 2.0 * jj as f64 - l as f64;
    let big_m = l as f64 - n as f64;
    let delta = h - chi;
    let (p, q) = pq(chi);
    let freq = u - delta / j;
    let log_f = move |y: f64| {
        let e = Complex64::new(0.0, y).exp();
        let base = e * p + e.conj() * q;
        Complex64::new(0.0, y * freq) - base.ln() * big_m - y * y / (2.0 * j)
    };
    let hi = (2.0 * j * (big_m * -(p - q).abs().max(1e-300).ln() + 200.0)).sqrt() + 1.0;
    let (w0, k) = window(&|y: f64| log_f(y).re, hi);
    let (z, err) = verified_integral(&log_f, w0.max(1e-3), k)?;
    let ln_scale = k + ln_binomial(l as u64, jj as u64) - ln_z_n(n, j, h) + chi * u + delta * delta / (2.0 * j)
        - big_m * (2.0 * chi.cosh()).ln()
        - 0.5 * (2.0 * std::f64::consts::PI * j).ln();
    let scale = ln_scale.exp();
    Ok(QuadValue { value: z.re * scale, imag: z.im * scale, error: err * scale })
}

fn pq(chi: f64) -> (f64, f64) {
    // p = e^chi / (e^chi + e^-chi), q = e^-chi / (e^chi + e^-chi)
    let q = 1.0 / (1.0 + (2.0 * chi).exp());
    (1.0 - q, q)
}

/// The rescaled integral at the saddle contour for `J = c/l`, `v = (2j-l)/l`:
/// `int (p e^{ix/sqrt l} + q e^{-ix/sqrt l})^n
///      (p e^{i2qx/sqrt l} + q e^{-i2px/sqrt l})^{-l} phi_c(x) dx`
/// with `chi = solve_chi(c, h, v)`, together with its large-`l` limit
/// `1/sqrt(1 - 4pqc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftedIntegral {
    pub chi: f64,
    pub p: f64,
    pub q: f64,
    pub value: QuadValue,
    pub limit: f64,
}

pub fn shifted_integral(n: usize, l: usize, c: f64, h: f64, v: f64) -> Result<ShiftedIntegral> {
    if !(c > 0.0) || l == 0 {
        return domain("need c > 0 and l > 0");
    }
    let chi = solve_chi(c, h, v)?;
    let (p, q) = pq(chi);
    let rl = (l as f64).sqrt();
    let nf = n as f64;
    let lf = l as f64;
    let log_f = move |x: f64| {
        let a = Complex64::new(0.0, x / rl).exp();
        let first = (a * p + a.conj() * q).ln() * nf;
        let second = (Complex64::new(0.0, 2.0 * q * x / rl).exp() * p
            + Complex64::new(0.0, -2.0 * p * x / rl).exp() * q)
            .ln()
            * lf;
        first - second - x * x / (2.0 * c)
    };
    let hi = (2.0 * c * (lf * -(p - q).abs().max(1e-300).ln() + 200.0)).sqrt() + 1.0;
    let (w0, k) = window(&|x: f64| log_f(x).re, hi);
    let (z, err) = verified_integral(&log_f, w0.max(1e-3), k)?;
    let scale = (k - 0.5 * (2.0 * std::f64::consts::PI * c).ln()).exp();
    let eps = 4.0 * p * q;
    Ok(ShiftedIntegral {
        chi,
        p,
        q,
        value: QuadValue { value: z.re * scale, imag: z.im * scale, error: err * scale },
        limit: if eps * c < 1.0 { 1.0 / (1.0 - eps * c).sqrt() } else { f64::INFINITY },
    })
}

/// `c + atanh(t) - c t` with `t = e^{-1/(2c)}`, i.e. `c + A - c tanh A` for
/// `cosh A = (1 - e^{-1/c})^{-1/2}`.
pub fn alpha(c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return domain("alpha needs c > 0");
    }
    let t = (-0.5 / c).exp();
    Ok(c + t.atanh() - c * t)
}

/// `ln(sqrt c + sqrt(c - 1))`, the positive minimizer of `xi - c tanh xi`
/// (zero at `c = 1`).
pub fn chi_star(c: f64) -> Result<f64> {
    if !(c >= 1.0) {
        return domain(format!("chi* needs c >= 1, got {c}"));
    }
    Ok((c.sqrt() + (c - 1.0).sqrt()).ln())
}

/// `chi* - c tanh chi* + c = ln(sqrt c + sqrt(c-1)) + c - sqrt(c^2 - c)`.
pub fn beta(c: f64) -> Result<f64> {
    if !(c > 1.0) {
        return domain(format!("beta is defined only for c > 1, got {c}"));
    }
    Ok(chi_star(c)? + c - (c * (c - 1.0)).sqrt())
}

/// Field threshold above which the signed extension is nonnegative for all
/// large `l` at `J = c/l`.
pub fn h_star(c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return domain("h* needs c > 0");
    }
    Ok(if c <= 1.0 {
        c.max(alpha(c)?)
    } else if c < 1.5 {
        alpha(c)?.max(beta(c)?)
    } else {
        beta(c)?
    })
}

/// Which expression defines [`h_star`] at `c`.
pub fn h_star_branch(c: f64) -> &'static str {
    if c <= 1.0 {
        "max(c,alpha)"
    } else if c < 1.5 {
        "max(alpha,beta)"
    } else {
        "beta"
    }
}

/// Solves `xi - c tanh xi = h - c v` for `xi > 0`, taking the branch
/// `xi >= chi*` when `c > 1`. Bisection followed by Newton polishing.
pub fn solve_chi(c: f64, h: f64, v: f64) -> Result<f64> {
    if !(c > 0.0) || !(-1.0..=1.0).contains(&v) || !h.is_finite() {
        return domain("solve_chi needs c > 0, finite h and v in [-1, 1]");
    }
    let rhs = h - c * v;
    let f = |x: f64| x - c * x.tanh() - rhs;
    let slack = 1e-13 * (1.0 + c + h.abs());
    let lo = if c > 1.0 {
        let cs = chi_star(c)?;
        let fmin = f(cs);
        if fmin > slack {
            return Err(Error::NoSolution(format!(
                "h - cv = {rhs} is below the minimum {} of xi - c tanh xi",
                beta(c)? - c
            )));
        }
        if fmin >= -slack {
            return Ok(cs);
        }
        cs
    } else {
        if rhs <= 0.0 {
            return Err(Error::NoSolution(format!("need h > cv for c <= 1, got h - cv = {rhs}")));
        }
        0.0
    };
    // x - c tanh x >= x - c, so the root lies below rhs + c
    let (mut a, mut b) = (lo, rhs + c + 1.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
        if b - a <= 1e-15 * b.max(1.0) {
            break;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..3 {
        let sech2 = 1.0 / x.cosh().powi(2);
        let d = 1.0 - c * sech2;
        if d <= 0.0 {
            break;
        }
        let nx = x - f(x) / d;
        if nx > lo && nx.is_finite() {
            x = nx;
        }
    }
    Ok(x)
}

/// Bracket `[-1/ln(1-eps), min(-pi^2/(4 ln(1-eps)), 1/eps)]` for
/// [`tilde_c`].
pub fn tilde_c_bounds(eps: f64) -> (f64, f64) {
    let ln1m = (-eps).ln_1p();
    let lo = -1.0 / ln1m;
    let hi = (-std::f64::consts::PI.powi(2) / (4.0 * ln1m)).min(1.0 / eps);
    (lo, hi)
}

/// Largest `c` with `e^{y^2/c}(1 - eps sin^2 y) >= 1` for all `y`, found by
/// minimizing `y^2 / -ln(1 - eps sin^2 y)` over `(0, pi/2]` (grid then
/// golden section), capped at its `y -> 0` limit `1/eps`.
pub fn tilde_c_numeric(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("eps must lie in [0, 1], got {eps}"));
    }
    if eps == 0.0 {
        return Ok(f64::INFINITY);
    }
    if eps == 1.0 {
        return Ok(0.0);
    }
    let g = |y: f64| y * y / -(-eps * y.sin().powi(2)).ln_1p();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let steps = 2000;
    let (mut best_i, mut best) = (steps, g(half_pi));
    for i in 1..steps {
        let v = g(half_pi * i as f64 / steps as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let step = half_pi / steps as f64;
    let (mut a, mut b) = ((best_i as f64 - 1.0) * step, ((best_i as f64 + 1.0) * step).min(half_pi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if g(x1.max(1e-300)) < g(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let ym = 0.5 * (a + b);
    let val = if ym > 0.0 { best.min(g(ym)) } else { best };
    let (lo, hi) = tilde_c_bounds(eps);
    Ok(val.min(1.0 / eps).clamp(lo, hi))
}

/// `tilde_c(eps)`: exactly `1/eps` for `eps <= 2/3`, numeric above.
/// `tilde_c(0) = inf`, `tilde_c(1) = 0`.
pub fn tilde_c(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return domain(format!("eps must lie in [0, 1], got {eps}"));
    }
    if eps == 0.0 {
        return Ok(f64::INFINITY);
    }
    if eps <= 2.0 / 3.0 {
        return Ok(1.0 / eps);
    }
    tilde_c_numeric(eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Positivity {
    /// `c < c_bar`: the extension is nonnegative for all large `l`.
    Certified { chi_bar: f64, eps: f64, c_bar: f64 },
    NotCertified { chi_bar: f64, eps: f64, c_bar: f64 },
    /// No solution for `chi_bar`.
    OutOfDomain,
}

impl Positivity {
    pub fn label(&self) -> &'static str {
        match self {
            Positivity::Certified { .. } => "Certified",
            Positivity::NotCertified { .. } => "NotCertified",
            Positivity::OutOfDomain => "OutOfDomain",
        }
    }
}

/// Domination test `c < tilde_c(1 / cosh^2 chi_bar)` with
/// `chi_bar = solve_chi(c, h, 1)`.
pub fn positivity_certificate(c: f64, h: f64) -> Result<Positivity> {
    if !(c > 0.0) {
        return domain("certificate needs c > 0");
    }
    let chi_bar = match solve_chi(c, h, 1.0) {
        Ok(x) => x,
        Err(Error::NoSolution(_)) => return Ok(Positivity::OutOfDomain),
        Err(e) => return Err(e),
    };
    if c > 1.0 && h <= beta(c)? {
        return Ok(Positivity::OutOfDomain);
    }
    let eps = 1.0 / chi_bar.cosh().powi(2);
    let c_bar = tilde_c(eps)?;
    Ok(if c < c_bar {
        Positivity::Certified { chi_bar, eps, c_bar }
    } else {
        Positivity::NotCertified { chi_bar, eps, c_bar }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curie_weiss::{cw_measure, CwParams};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn normalization() {
        assert!(close(z_n(3, 0.7, 0.4).unwrap(), 4.7260938315181099, 1e-14));
        assert!(close(z_n(1, 0.3, 0.0).unwrap(), 2.0 * (-0.15f64).exp(), 1e-15));
        assert!(close(z_n(5, 0.4, 0.9).unwrap(), z_n(5, 0.4, -0.9).unwrap(), 1e-14));
        assert!(close(z_n(4, 1e-12, 0.3).unwrap(), (2.0 * 0.3f64.cosh()).powi(4), 1e-10));
        assert!(z_n(3, 0.0, 0.1).is_err());
    }

    #[test]
    fn q_matches_high_precision_oracle() {
        let want = [
            2.1226812416025152e-11,
            1.3931208289712011e-7,
            0.00011406261344482833,
            0.014703844524554198,
            0.29937708644449383,
            0.73681850530319884,
            -0.051013638219001409,
        ];
        let qv = q_extension(2, 6, 0.3, 0.8, 1e-12).unwrap();
        for (a, b) in qv.q.iter().zip(want) {
            assert!((a - b).abs() < 1e-14 + 1e-13 * b.abs(), "{a} vs {b}");
        }
        let want = [0.0003943134947310319, 0.084751811981068398, 0.82970774904840114];
        let qv = q_extension(3, 4, 0.5, 0.0, 1e-12).unwrap();
        for (jj, b) in want.iter().enumerate() {
            assert!(close(qv.q[jj], *b, 1e-13));
            assert!(close(qv.q[4 - jj], *b, 1e-13));
        }
    }

    #[test]
    fn large_l_entries_have_relative_accuracy() {
        let qv = q_extension(3, 200, 0.5 / 200.0, 0.8, 1e-10).unwrap();
        let want = [
            (0, 6.8384579490415924e-228),
            (50, 2.1012303568056478e-109),
            (100, 3.176484773912663e-39),
            (150, 0.00020080604420456692),
            (200, 2.4107029924752721e-20),
        ];
        for (jj, b) in want {
            assert!((qv.q[jj] / b - 1.0).abs() < 1e-9, "j = {jj}: {} vs {b}", qv.q[jj]);
        }
        let qv = q_extension(2, 400, 2.0 / 400.0, 1.6, 1e-10).unwrap();
        assert!((qv.q[300] / 6.282154304137685e-87 - 1.0).abs() < 1e-9);
        assert!((qv.q[400] / 2.2688060998167121e-9 - 1.0).abs() < 1e-9);
        assert!((qv.sum() - 1.0).abs() < 1e-10);
        assert!(qv.all_positive());
        let qv = q_extension(2, 400, 2.0 / 400.0, 1.6, 1e-10).unwrap();
        assert!((qv.ln_abs[0] - (4.6647580905759254f64.ln() - 1248.0 * 10f64.ln())).abs() < 1e-8);
    }

    #[test]
    fn projects_onto_curie_weiss() {
        for &(n, l, j, h) in &[(2usize, 6usize, 0.3, 0.8), (4, 9, 1.7, 0.0), (1, 7, 0.05, 2.0), (5, 12, 2.0, 1.3)] {
            let qv = q_extension(n, l, j, h, 1e-12).unwrap();
            let cw = cw_measure(&CwParams::new(n, (2.0 * h).exp(), (2.0 * j).exp()).unwrap());
            for (a, b) in qv.projection().iter().zip(cw.pi()) {
                assert!((a - b).abs() < 1e-10, "({n},{l},{j},{h}): {a} vs {b}");
            }
            assert!((qv.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_field_is_continuous() {
        let a = q_extension(3, 8, 0.4, 0.0, 1e-12).unwrap();
        let b = q_extension(3, 8, 0.4, 1e-6, 1e-12).unwrap();
        for (x, y) in a.q.iter().zip(&b.q) {
            assert!((x - y).abs() < 1e-4);
        }
    }

    #[test]
    fn odd_n_next_size_is_nonnegative() {
        for n in [1usize, 3, 5, 7] {
            for j in [0.1, 0.5, 1.0, 3.0] {
                let qv = q_extension(n, n + 1, j, 0.0, 1e-12).unwrap();
                assert!(qv.min() >= -1e-12, "n = {n}, J = {j}: {}", qv.min());
            }
        }
        let qv = q_extension(4, 5, 0.01, 0.0, 1e-12).unwrap();
        assert!(qv.min() >= 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(q_extension(2, 2, 0.3, 0.1, 1e-10).is_err());
        assert!(q_extension(2, 4, -0.3, 0.1, 1e-10).is_err());
        assert!(q_extension(2, 4, 0.3, -0.1, 1e-10).is_err());
        assert!(tilde_q_integral(2, 4, 0.3, 1e-4, 1).is_err());
    }

    #[test]
    fn csv_layout() {
        let qv = q_extension(1, 2, 0.5, 0.5, 1e-10).unwrap();
        let csv = qv.to_csv();
        assert!(csv.starts_with("j,Q,tail_bound\n0,"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn integral_agrees_with_series() {
        let qv = q_extension(2, 6, 0.3, 0.8, 1e-12).unwrap();
        for jj in 0..=6 {
            let t = tilde_q_integral(2, 6, 0.3, 0.8, jj).unwrap();
            assert!((t.value - qv.q[jj]).abs() < 1e-8, "j = {jj}: {} vs {}", t.value, qv.q[jj]);
            assert!(t.imag.abs() < 1e-10);
        }
    }

    #[test]
    fn shifted_contour_agrees_with_series() {
        let (n, l, c, h) = (3usize, 40usize, 1.0, 1.5);
        let j = c / l as f64;
        let qv = q_extension(n, l, j, h, 1e-12).unwrap();
        for jj in [0usize, 7, 20, 33, 40] {
            let v = (2.0 * jj as f64 - l as f64) / l as f64;
            let chi = solve_chi(c, h, v).unwrap();
            let s = shifted_q(n, l, j, h, jj, chi).unwrap();
            assert!(
                (s.value / qv.q[jj] - 1.0).abs() < 1e-8,
                "j = {jj}: {} vs {}",
                s.value,
                qv.q[jj]
            );
        }
        // any contour to the right of the poles gives the same value
        let s = shifted_q(2, 6, 0.3, 0.0, 2, 0.7).unwrap();
        let qv = q_extension(2, 6, 0.3, 0.0, 1e-12).unwrap();
        assert!((s.value - qv.q[2]).abs() < 1e-9);
    }

    #[test]
    fn rescaled_integral_approaches_limit() {
        let mut prev = f64::INFINITY;
        for l in [50usize, 100, 200] {
            let s = shifted_integral(3, l, 1.0, 1.5, 0.2).unwrap();
            let gap = (s.value.value - s.limit).abs();
            assert!(gap < prev, "l = {l}: gap {gap}");
            assert!(s.value.imag.abs() < 1e-8);
            prev = gap;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn thresholds() {
        assert!(close(alpha(0.5).unwrap(), 0.7020286958669312, 1e-14));
        assert!(close(alpha(1.2).unwrap(), 1.2003806223719715, 1e-14));
        assert!(close(alpha(0.1).unwrap(), 0.10606425426939477, 1e-14));
        assert!(close(beta(2.0).unwrap(), 1.467160024646448, 1e-14));
        assert!(close(beta(1.2).unwrap(), 1.1436094146886469, 1e-14));
        assert!(close(h_star(2.0).unwrap(), beta(2.0).unwrap(), 0.0));
        assert!(close(h_star(0.5).unwrap(), alpha(0.5).unwrap(), 0.0));
        assert!(h_star(0.5).unwrap() > 0.5);
        assert!(close(h_star(1.2).unwrap(), 1.2003806223719715, 1e-14));
        assert!(beta(1.0).is_err());
        for c in [1e2, 1e4, 1e6] {
            let gap = (beta(c).unwrap() - chi_star(c).unwrap()).abs();
            assert!((gap - 0.5).abs() < 1.0 / c, "c = {c}: {gap}");
        }
    }

    #[test]
    fn chi_solutions() {
        let x = solve_chi(2.0, beta(2.0).unwrap(), 1.0).unwrap();
        assert!((x - 2f64.sqrt().ln_1p()).abs() < 1e-6);
        assert!(close(solve_chi(1.0, 3.0, 1.0).unwrap(), 2.9950052293665156, 1e-14));
        let x = solve_chi(1e-8, 0.7, 0.5).unwrap();
        assert!((x - (0.7 - 0.5e-8 + 1e-8 * 0.7f64.tanh())).abs() < 1e-14);
        assert!(matches!(solve_chi(2.0, 1.0, 1.0), Err(Error::NoSolution(_))));
        assert!(matches!(solve_chi(0.5, 0.5, 1.0), Err(Error::NoSolution(_))));
    }

    #[test]
    fn tilde_c_values() {
        assert_eq!(tilde_c(0.5).unwrap(), 2.0);
        assert!(close(tilde_c(2.0 / 3.0).unwrap(), 1.5, 1e-15));
        assert_eq!(tilde_c(1.0).unwrap(), 0.0);
        assert_eq!(tilde_c(0.0).unwrap(), f64::INFINITY);
        let v = tilde_c(0.9).unwrap();
        let (lo, hi) = tilde_c_bounds(0.9);
        assert!(lo <= v && v <= hi);
        for (eps, want) in [(0.7, 1.4251337533070198), (0.8, 1.1964365146080565), (0.9, 0.93591875275104247), (0.99, 0.52518538433010005)] {
            assert!(close(tilde_c(eps).unwrap(), want, 1e-10), "{eps}");
        }
        for k in 1..=20 {
            let eps = k as f64 / 30.0;
            assert!(close(tilde_c_numeric(eps).unwrap(), 1.0 / eps, 1e-12), "{eps}");
        }
    }

    #[test]
    fn certificates() {
        let c = positivity_certificate(1.0, 3.0).unwrap();
        match c {
            Positivity::Certified { c_bar, .. } => assert!((c_bar - 101.0).abs() < 1.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(positivity_certificate(2.0, 1.4).unwrap(), Positivity::OutOfDomain);
        for &(c, h) in &[(0.5, 0.8), (1.0, 1.5), (2.0, 1.6)] {
            assert_eq!(positivity_certificate(c, h).unwrap().label(), "Certified");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn chi_residual(c in 0.01f64..5.0, h in 0.0f64..6.0, v in -1.0f64..1.0) {
            if let Ok(x) = solve_chi(c, h, v) {
                prop_assert!((x - c * x.tanh() - (h - c * v)).abs() <= 1e-12);
                if c > 1.0 {
                    prop_assert!(x >= chi_star(c).unwrap());
                }
            }
        }

        #[test]
        fn hstar_implies_certified(c in 0.05f64..4.0, dh in 1e-3f64..2.0) {
            let h = h_star(c).unwrap() + dh;
            prop_assert_eq!(positivity_certificate(c, h).unwrap().label(), "Certified");
        }

        #[test]
        fn tilde_c_nonincreasing(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(tilde_c(hi).unwrap() <= tilde_c(lo).unwrap() * (1.0 + 1e-12));
            let (blo, bhi) = tilde_c_bounds(hi);
            let v = tilde_c(hi).unwrap();
            prop_assert!(hi == 0.0 || hi == 1.0 || (blo * (1.0 - 1e-12) <= v && v <= bhi * (1.0 + 1e-12)));
        }

        #[test]
        fn projection_identity(n in 1usize..5, extra in 1usize..6, j in 0.01f64..2.0, h in 0.0f64..2.0) {
            let l = n + extra;
            let qv = q_extension(n, l, j, h, 1e-12).unwrap();
            let cw = cw_measure(&CwParams::new(n, (2.0 * h).exp(), (2.0 * j).exp()).unwrap());
            for (a, b) in qv.projection().iter().zip(cw.pi()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }
}
