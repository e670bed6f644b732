//! de Finetti mixtures for Gibbs measures whose Hamiltonian is the square
//! of a sum, `(1/2) |x_1 + ... + x_n|^2`, against a base law `nu` on `R^s`.
//!
//! With `V` of density `rho(w) ∝ mgf_nu(w)^n e^{-|w|^2/2}` and `P_w` the
//! exponential tilt of `nu` by `e^{w·x}`, the Gibbs measure equals the
//! mixture of `P_w^{⊗n}` over `V`. Potts, clock, Ising and Heisenberg models
//! embed by placing `nu` on a sphere of radius `sqrt J`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::measure::CountDistribution;
use crate::quadrature::{hermite_doubling, GaussHermite};
use crate::scalar::log_sum_exp;

/// Samples per RNG block. Block `b` draws from the ChaCha stream `b`, so
/// output does not depend on the number of worker threads.
pub const BLOCK: usize = 1024;

/// Minimum acceptance rate of the rejection sampler.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

/// Minimum effective sample size for importance sampling.
pub const MIN_ESS: f64 = 100.0;

/// Base law `nu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseMeasure {
    /// Finitely many atoms; `log_weights` are normalized.
    Atoms { points: Vec<Vec<f64>>, log_weights: Vec<f64> },
    /// Law of `radius * u` with `u` on the unit sphere of `R^s`
    /// (`s = field.len() >= 2`) having density `∝ e^{field·u}`.
    Sphere { radius: f64, field: Vec<f64> },
}

impl BaseMeasure {
    /// Atoms with positive (unnormalized) weights.
    pub fn atoms(points: Vec<Vec<f64>>, weights: &[f64]) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return domain("need one positive weight per atom");
        }
        let s = points[0].len();
        if s == 0 || points.iter().any(|p| p.len() != s || p.iter().any(|x| !x.is_finite())) {
            return domain("atoms must be finite points of a common positive dimension");
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return domain("atom weights must be positive and finite");
        }
        let lw: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        Ok(Self::from_log_weights(points, &lw))
    }

    fn from_log_weights(points: Vec<Vec<f64>>, lw: &[f64]) -> Self {
        let z = log_sum_exp(lw);
        BaseMeasure::Atoms { points, log_weights: lw.iter().map(|w| w - z).collect() }
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseMeasure::Atoms { points, .. } => points[0].len(),
            BaseMeasure::Sphere { field, .. } => field.len(),
        }
    }

    /// Number of atoms, `None` for a sphere.
    pub fn atom_count(&self) -> Option<usize> {
        match self {
            BaseMeasure::Atoms { points, .. } => Some(points.len()),
            BaseMeasure::Sphere { .. } => None,
        }
    }

    fn radius(&self) -> f64 {
        match self {
            BaseMeasure::Atoms { points, .. } => points.iter().map(|p| norm(p)).fold(0.0, f64::max),
            BaseMeasure::Sphere { radius, .. } => *radius,
        }
    }

    /// `ln ∫ e^{w·x} dnu(x)`.
    pub fn ln_mgf(&self, w: &[f64]) -> f64 {
        match self {
            BaseMeasure::Atoms { points, log_weights } => {
                let t: Vec<f64> = points.iter().zip(log_weights).map(|(p, lw)| lw + dot(p, w)).collect();
                log_sum_exp(&t)
            }
            BaseMeasure::Sphere { radius, field } => {
                let order = field.len() as f64 / 2.0;
                let t: Vec<f64> = field.iter().zip(w).map(|(b, x)| b + radius * x).collect();
                ln_hyp0f1(order, dot(&t, &t) / 4.0) - ln_hyp0f1(order, dot(field, field) / 4.0)
            }
        }
    }

    /// Atom probabilities under the tilt by `e^{w·x}`.
    pub fn tilted_probs(&self, w: &[f64]) -> Option<Vec<f64>> {
        match self {
            BaseMeasure::Atoms { points, log_weights } => {
                let t: Vec<f64> = points.iter().zip(log_weights).map(|(p, lw)| lw + dot(p, w)).collect();
                let z = log_sum_exp(&t);
                Some(t.iter().map(|x| (x - z).exp()).collect())
            }
            BaseMeasure::Sphere { .. } => None,
        }
    }

    /// Mean of the tilted law.
    pub fn tilted_mean(&self, w: &[f64]) -> Vec<f64> {
        match self {
            BaseMeasure::Atoms { points, .. } => {
                let p = self.tilted_probs(w).unwrap();
                let mut m = vec![0.0; w.len()];
                for (pi, a) in p.iter().zip(points) {
                    for (mi, ai) in m.iter_mut().zip(a) {
                        *mi += pi * ai;
                    }
                }
                m
            }
            BaseMeasure::Sphere { radius, field } => {
                let t: Vec<f64> = field.iter().zip(w).map(|(b, x)| b + radius * x).collect();
                let k = norm(&t);
                if k == 0.0 {
                    return vec![0.0; w.len()];
                }
                let a = mean_resultant(field.len(), k);
                t.iter().map(|x| radius * a * x / k).collect()
            }
        }
    }
}

/// `ln 0F1(; b; z)` for `b > 0`, `z >= 0`, summed in log space.
fn ln_hyp0f1(b: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let lz = z.ln();
    let lgb = ln_gamma(b);
    let mut terms = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let t = kf * lz - ln_gamma(kf + 1.0) - ln_gamma(kf + b) + lgb;
        best = best.max(t);
        terms.push(t);
        // terms decrease once k(k + b) > z
        if kf * (kf + b) > z && t < best - 40.0 {
            break;
        }
        k += 1;
    }
    log_sum_exp(&terms)
}

/// `I_{s/2}(k) / I_{s/2-1}(k)`, the mean resultant length of the von
/// Mises-Fisher law with concentration `k` on the sphere of `R^s`.
fn mean_resultant(s: usize, k: f64) -> f64 {
    let b = s as f64 / 2.0;
    let z = k * k / 4.0;
    // d/dk ln 0F1(b; k^2/4) = (k / (2b)) 0F1(b+1; z) / 0F1(b; z)
    (k / (2.0 * b)) * (ln_hyp0f1(b + 1.0, z) - ln_hyp0f1(b, z)).exp()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Mean-field spin model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "param")]
pub enum ModelKind {
    /// Spins `±1`, field `h(±1) = ±h`. Atom 0 is spin `-1`.
    Ising,
    /// `q` states, energy `J/2` per ordered pair in the same state.
    Potts(usize),
    /// `q` equally spaced unit vectors in the plane.
    Clock(usize),
    /// Unit vectors of `R^{r+1}` with a linear field `h(σ) = b·σ`.
    Heisenberg(usize),
}

/// Base law of the named model with coupling `J >= 0` and field `h`.
///
/// `h` holds one value for `Ising`, one per state for `Potts` and `Clock`,
/// and the field vector `b` (length `r + 1`) for `Heisenberg(r)`. An empty
/// slice means zero field.
pub fn embed_model(kind: ModelKind, j: f64, h: &[f64]) -> Result<BaseMeasure> {
    if !(j >= 0.0 && j.is_finite()) {
        return domain(format!("the square representation needs J >= 0, got {j}"));
    }
    let r = j.sqrt();
    let field = |len: usize| -> Result<Vec<f64>> {
        match h.len() {
            0 => Ok(vec![0.0; len]),
            k if k == len => Ok(h.to_vec()),
            k => domain(format!("expected {len} field values, got {k}")),
        }
    };
    match kind {
        ModelKind::Ising => {
            let hv = field(1)?[0];
            Ok(BaseMeasure::from_log_weights(vec![vec![-r], vec![r]], &[-hv, hv]))
        }
        ModelKind::Potts(q) => {
            if q < 2 {
                return domain("Potts needs q >= 2");
            }
            let pts = (0..q)
                .map(|i| (0..q).map(|k| if k == i { r } else { 0.0 }).collect())
                .collect();
            Ok(BaseMeasure::from_log_weights(pts, &field(q)?))
        }
        ModelKind::Clock(q) => {
            if q < 2 {
                return domain("clock needs q >= 2");
            }
            let pts = (0..q)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / q as f64;
                    vec![r * t.cos(), r * t.sin()]
                })
                .collect();
            Ok(BaseMeasure::from_log_weights(pts, &field(q)?))
        }
        ModelKind::Heisenberg(0) => embed_model(ModelKind::Ising, j, h),
        ModelKind::Heisenberg(d) => Ok(BaseMeasure::Sphere { radius: r, field: field(d + 1)? }),
    }
}

/// Gibbs measure of `n` spins with density `e^{|x_1 + ... + x_n|^2 / 2}`
/// against `nu^{⊗n}` and its mixing density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureModel {
    pub base: BaseMeasure,
    pub n: usize,
}

impl MixtureModel {
    pub fn new(base: BaseMeasure, n: usize) -> Result<Self> {
        if n == 0 {
            return domain("need n >= 1");
        }
        Ok(Self { base, n })
    }

    /// `n ln mgf(w) - |w|^2 / 2`, the log mixing density up to a constant.
    pub fn log_density(&self, w: &[f64]) -> f64 {
        self.n as f64 * self.base.ln_mgf(w) - 0.5 * dot(w, w)
    }

    fn grad(&self, w: &[f64]) -> Vec<f64> {
        let m = self.base.tilted_mean(w);
        m.iter().zip(w).map(|(mi, wi)| self.n as f64 * mi - wi).collect()
    }
}

/// Exact law of the type vector (number of sites in each atom) of the Gibbs
/// measure, by enumeration of compositions of `n`.
pub fn gibbs_types(model: &MixtureModel) -> Result<Vec<(Vec<usize>, f64)>> {
    let BaseMeasure::Atoms { points, log_weights } = &model.base else {
        return domain("exact enumeration needs a finite base measure");
    };
    let n = model.n;
    let types = compositions(n, points.len());
    let lf: Vec<f64> = (0..=n).map(|k| ln_gamma(k as f64 + 1.0)).collect();
    let logs: Vec<f64> = types
        .iter()
        .map(|c| {
            let mut sum = vec![0.0; points[0].len()];
            let mut lw = lf[n];
            for (i, &ci) in c.iter().enumerate() {
                lw += ci as f64 * log_weights[i] - lf[ci];
                for (s, a) in sum.iter_mut().zip(&points[i]) {
                    *s += ci as f64 * a;
                }
            }
            lw + 0.5 * dot(&sum, &sum)
        })
        .collect();
    let z = log_sum_exp(&logs);
    Ok(types.into_iter().zip(logs).map(|(c, l)| (c, (l - z).exp())).collect())
}

/// `ln Z_{nu,n} = ln E exp(|x_1 + ... + x_n|^2 / 2)` under `nu^{⊗n}`, by
/// enumeration.
pub fn ln_partition_exact(model: &MixtureModel) -> Result<f64> {
    let BaseMeasure::Atoms { points, log_weights } = &model.base else {
        return domain("exact enumeration needs a finite base measure");
    };
    let n = model.n;
    let lf: Vec<f64> = (0..=n).map(|k| ln_gamma(k as f64 + 1.0)).collect();
    let logs: Vec<f64> = compositions(n, points.len())
        .iter()
        .map(|c| {
            let mut sum = vec![0.0; points[0].len()];
            let mut lw = lf[n];
            for (i, &ci) in c.iter().enumerate() {
                lw += ci as f64 * log_weights[i] - lf[ci];
                for (s, a) in sum.iter_mut().zip(&points[i]) {
                    *s += ci as f64 * a;
                }
            }
            lw + 0.5 * dot(&sum, &sum)
        })
        .collect();
    Ok(log_sum_exp(&logs))
}

/// All vectors of `parts` nonnegative integers summing to `n`, in
/// lexicographic order.
pub fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(n, parts, &mut Vec::new(), &mut out);
    }
    out
}

fn ln_multinomial(c: &[usize]) -> f64 {
    let n: usize = c.iter().sum();
    ln_gamma(n as f64 + 1.0) - c.iter().map(|&k| ln_gamma(k as f64 + 1.0)).sum::<f64>()
}

/// Comparison of the mixture's type law against exact enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureReport {
    /// `"quadrature"` (one dimension) or `"importance"`.
    pub method: &'static str,
    pub types: Vec<Vec<usize>>,
    pub exact: Vec<f64>,
    pub mixture: Vec<f64>,
    /// Standard errors of the importance sampling estimates.
    pub std_err: Option<Vec<f64>>,
    pub max_abs_diff: f64,
    /// Largest `|mixture - exact| / std_err`.
    pub max_z: Option<f64>,
    pub ess: Option<f64>,
    /// `ln Z_{nu,n}` from the mixture route, with its standard error for
    /// importance sampling.
    pub ln_partition: f64,
    pub ln_partition_se: Option<f64>,
    pub ln_partition_exact: f64,
    pub passed: bool,
}

/// Checks `mu_{nu,n} = ∫ P_w^{⊗n} rho(w) dw` on type probabilities.
///
/// For `s = 1` the mixture integral is evaluated by Gauss-Hermite rules
/// (against `e^{-w^2/2}`) and must match within `tol`. For `s >= 2` it is
/// estimated by self-normalized importance sampling from `samples` draws of
/// a Gaussian mixture centered at the modes of the mixing density, and each
/// type must lie within three standard errors.
pub fn mixture_check(model: &MixtureModel, tol: f64, samples: usize, seed: u64) -> Result<MixtureReport> {
    let exact = gibbs_types(model)?;
    let ln_z_exact = ln_partition_exact(model)?;
    let types: Vec<Vec<usize>> = exact.iter().map(|e| e.0.clone()).collect();
    let exact_p: Vec<f64> = exact.iter().map(|e| e.1).collect();
    let BaseMeasure::Atoms { points, log_weights } = &model.base else { unreachable!() };
    let s = model.base.dim();
    let n = model.n;
    let log_term = |c: &[usize], w: &[f64]| -> f64 {
        // ln [multinomial * prod_i (nu_i e^{w·a_i})^{c_i}], i.e. the type
        // probability under P_w times mgf(w)^n
        ln_multinomial(c)
            + c.iter()
                .enumerate()
                .map(|(i, &ci)| ci as f64 * (log_weights[i] + dot(&points[i], w)))
                .sum::<f64>()
    };
    if s == 1 {
        // last entry: E mgf(W)^n
        let vals = hermite_doubling(tol * 1e-3, |rule: &GaussHermite| {
            let mut out: Vec<f64> = types
                .iter()
                .map(|c| rule.expect(|z| log_term(c, &[z]).exp()))
                .collect();
            out.push(rule.expect(|z| (n as f64 * model.base.ln_mgf(&[z])).exp()));
            out
        })?;
        let z = *vals.last().unwrap();
        let mix: Vec<f64> = vals[..types.len()].iter().map(|v| v / z).collect();
        let max_abs_diff = max_diff(&mix, &exact_p);
        return Ok(MixtureReport {
            method: "quadrature",
            types,
            exact: exact_p,
            mixture: mix,
            std_err: None,
            max_abs_diff,
            max_z: None,
            ess: None,
            ln_partition: z.ln(),
            ln_partition_se: None,
            ln_partition_exact: ln_z_exact,
            passed: max_abs_diff <= tol,
        });
    }
    if samples < 2 {
        return domain("importance sampling needs at least two samples");
    }
    // Proposal: the rejection envelope. Per block: ln weights and ln type
    // probabilities under P_w.
    let env = envelope_shape(model);
    let sd = env.var.sqrt();
    let blocks = samples.div_ceil(BLOCK);
    let per_block: Vec<Vec<(f64, Vec<f64>)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = BLOCK.min(samples - b * BLOCK);
            (0..count)
                .map(|_| {
                    let c = &env.centers[rng.random_range(0..env.centers.len())];
                    let w: Vec<f64> = c.iter().map(|ci| ci + sd * rng.sample::<f64, _>(StandardNormal)).collect();
                    let ln_mgf_n = n as f64 * model.base.ln_mgf(&w);
                    let lw = ln_mgf_n - 0.5 * dot(&w, &w) - env.ln_g(&w);
                    let tp: Vec<f64> = types.iter().map(|c| log_term(c, &w) - ln_mgf_n).collect();
                    (lw, tp)
                })
                .collect()
        })
        .collect();
    let draws: Vec<(f64, Vec<f64>)> = per_block.into_iter().flatten().collect();
    let lws: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let shift = lws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let wts: Vec<f64> = lws.iter().map(|l| (l - shift).exp()).collect();
    let sw: f64 = wts.iter().sum();
    let sw2: f64 = wts.iter().map(|w| w * w).sum();
    let ess = sw * sw / sw2;
    if ess < MIN_ESS {
        return Err(Error::InconclusiveMc(format!("effective sample size {ess:.1} below {MIN_ESS}")));
    }
    let m = draws.len() as f64;
    let mean_w = sw / m;
    let var_w = wts.iter().map(|w| (w - mean_w).powi(2)).sum::<f64>() / (m - 1.0);
    // ∫ mgf^n e^{-|w|^2/2} dw = (2π)^{s/2} Z
    let ln_z = shift + mean_w.ln() - 0.5 * s as f64 * (2.0 * std::f64::consts::PI).ln();
    let ln_z_se = (var_w / m).sqrt() / mean_w;
    let mut mix = Vec::with_capacity(types.len());
    let mut se = Vec::with_capacity(types.len());
    for t in 0..types.len() {
        let vals: Vec<f64> = draws.iter().map(|d| d.1[t].exp()).collect();
        let p: f64 = wts.iter().zip(&vals).map(|(w, v)| w * v).sum::<f64>() / sw;
        let v: f64 = wts.iter().zip(&vals).map(|(w, x)| (w * (x - p)).powi(2)).sum::<f64>() / (sw * sw);
        mix.push(p);
        se.push(v.sqrt());
    }
    let max_abs_diff = max_diff(&mix, &exact_p);
    let max_z = mix
        .iter()
        .zip(&exact_p)
        .zip(&se)
        .map(|((a, b), s)| if *s > 0.0 { (a - b).abs() / s } else if (a - b).abs() < 1e-12 { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max);
    Ok(MixtureReport {
        method: "importance",
        types,
        exact: exact_p,
        mixture: mix,
        std_err: Some(se),
        max_abs_diff,
        max_z: Some(max_z),
        ess: Some(ess),
        ln_partition: ln_z,
        ln_partition_se: Some(ln_z_se),
        ln_partition_exact: ln_z_exact,
        passed: max_z <= 3.0,
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Ising configuration weights `u_k = E W^k (1-W)^{n-k}` from the
/// one-dimensional mixing variable `V` of an Ising embedding, with
/// `W = P_V(spin +1)`. Gauss-Hermite against `e^{-w^2/2}`.
pub fn ising_mixing_weights(model: &MixtureModel, tol: f64) -> Result<Vec<f64>> {
    match &model.base {
        BaseMeasure::Atoms { points, .. } if points.len() == 2 && points[0].len() == 1 => {}
        _ => return domain("expected a two-atom base measure on the line"),
    }
    let n = model.n;
    hermite_doubling(tol, |rule| {
        let lt: Vec<f64> = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(z, w)| w.ln() + n as f64 * model.base.ln_mgf(&[*z]))
            .collect();
        let norm = log_sum_exp(&lt);
        (0..=n)
            .map(|k| {
                rule.nodes
                    .iter()
                    .zip(&lt)
                    .map(|(z, l)| {
                        let p = model.base.tilted_probs(&[*z]).unwrap();
                        (l - norm + k as f64 * p[1].ln() + (n - k) as f64 * p[0].ln()).exp()
                    })
                    .sum()
            })
            .collect()
    })
}

/// Binary count law obtained by declaring the atoms in `ones` to be `1`.
pub fn fuzzy_projection(model: &MixtureModel, ones: &[usize]) -> Result<CountDistribution<f64>> {
    let types = gibbs_types(model)?;
    let mut pi = vec![0.0; model.n + 1];
    for (c, p) in types {
        let k: usize = ones.iter().map(|&i| c.get(i).copied().unwrap_or(0)).sum();
        pi[k] += p;
    }
    CountDistribution::new(pi, 1e-12)
}

/// One draw from the mixture: the mixing variable and the spins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Draw {
    pub w: Vec<f64>,
    pub spins: Spins,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Spins {
    /// Atom indices.
    Atoms(Vec<usize>),
    /// Unit vectors.
    Sphere(Vec<Vec<f64>>),
}

/// Output of [`sample_mixture`] with the rejection diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    pub draws: Vec<Draw>,
    pub proposals: u64,
    pub acceptance_rate: f64,
    /// Largest observed `rho / (K g)`; above one means the envelope
    /// constant was too small somewhere.
    pub max_ratio: f64,
    pub envelope_centers: Vec<Vec<f64>>,
    pub envelope_variance: f64,
}

impl SampleSet {
    /// CSV rows `sample,site,value`: the atom index, the angle for planar
    /// spins, or `;`-separated coordinates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,site,value\n");
        for (i, d) in self.draws.iter().enumerate() {
            match &d.spins {
                Spins::Atoms(v) => {
                    for (site, x) in v.iter().enumerate() {
                        out.push_str(&format!("{i},{site},{x}\n"));
                    }
                }
                Spins::Sphere(v) => {
                    for (site, x) in v.iter().enumerate() {
                        let val = if x.len() == 2 {
                            format!("{}", x[1].atan2(x[0]))
                        } else {
                            x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
                        };
                        out.push_str(&format!("{i},{site},{val}\n"));
                    }
                }
            }
        }
        out
    }

    /// Atom indices of every draw; `None` for sphere spins.
    pub fn atom_configs(&self) -> Option<Vec<Vec<usize>>> {
        self.draws
            .iter()
            .map(|d| match &d.spins {
                Spins::Atoms(v) => Some(v.clone()),
                Spins::Sphere(_) => None,
            })
            .collect()
    }
}

/// Rejection envelope: an equal mixture of `N(c, var I)` over the centers.
struct Envelope {
    centers: Vec<Vec<f64>>,
    var: f64,
    ln_k: f64,
}

impl Envelope {
    fn ln_g(&self, w: &[f64]) -> f64 {
        let s = w.len() as f64;
        let t: Vec<f64> = self
            .centers
            .iter()
            .map(|c| {
                let d2: f64 = c.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum();
                -0.5 * d2 / self.var
            })
            .collect();
        log_sum_exp(&t) - (self.centers.len() as f64).ln() - 0.5 * s * (2.0 * std::f64::consts::PI * self.var).ln()
    }
}

/// Local maxima of the mixing density by damped gradient ascent from the
/// origin, from `n` times each atom, and from `±n R e_i`.
fn find_modes(model: &MixtureModel) -> Vec<Vec<f64>> {
    let s = model.base.dim();
    let nf = model.n as f64;
    let mut starts = vec![vec![0.0; s]];
    if let BaseMeasure::Atoms { points, .. } = &model.base {
        for p in points {
            starts.push(p.iter().map(|x| nf * x).collect());
        }
    }
    let r = model.base.radius();
    for i in 0..s {
        for sign in [-1.0, 1.0] {
            let mut v = vec![0.0; s];
            v[i] = sign * nf * r;
            starts.push(v);
        }
    }
    let mut modes: Vec<Vec<f64>> = Vec::new();
    for mut w in starts {
        for _ in 0..5000 {
            let g = model.grad(&w);
            if norm(&g) < 1e-10 {
                break;
            }
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi += 0.5 * gi;
            }
        }
        let scale = 1e-4 * (1.0 + nf * r);
        if !modes.iter().any(|m| m.iter().zip(&w).all(|(a, b)| (a - b).abs() < scale)) {
            modes.push(w);
        }
    }
    // keep only strict local maxima; a start at a saddle never moves
    let maxima: Vec<Vec<f64>> = modes.iter().filter(|m| local_variance(model, m).is_some()).cloned().collect();
    if !maxima.is_empty() {
        modes = maxima;
    }
    let best = modes.iter().map(|m| model.log_density(m)).fold(f64::NEG_INFINITY, f64::max);
    // drop centers that carry negligible mass
    modes.retain(|m| model.log_density(m) > best - 30.0);
    modes
}

/// Largest eigenvalue of the inverse negative Hessian of `ln rho` at `w`,
/// by central differences of the gradient. `None` unless the Hessian is
/// negative definite.
fn local_variance(model: &MixtureModel, w: &[f64]) -> Option<f64> {
    let s = w.len();
    let h = 1e-5;
    let mut hess = nalgebra::DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        let mut a = w.to_vec();
        let mut b = w.to_vec();
        a[i] += h;
        b[i] -= h;
        let (ga, gb) = (model.grad(&a), model.grad(&b));
        for k in 0..s {
            hess[(k, i)] = -(ga[k] - gb[k]) / (2.0 * h);
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    let lmin = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    (lmin > 1e-6).then(|| 1.0 / lmin)
}

fn envelope_shape(model: &MixtureModel) -> Envelope {
    let centers = find_modes(model);
    let var = 2.0 * centers.iter().map(|c| local_variance(model, c).unwrap_or(1e3)).fold(1.0, f64::max);
    Envelope { centers, var, ln_k: 0.0 }
}

fn build_envelope(model: &MixtureModel, seed: u64) -> Envelope {
    let mut env = envelope_shape(model);
    let var = env.var;
    let s = model.base.dim();
    let sd = var.sqrt();
    let mut best = f64::NEG_INFINITY;
    let mut probe = |w: &[f64]| {
        let r = model.log_density(w) - env.ln_g(w);
        if r > best {
            best = r;
        }
    };
    if s <= 3 {
        let steps = [0, 61, 25, 13][s] as i64;
        for c in &env.centers {
            let mut idx = vec![0i64; s];
            loop {
                let w: Vec<f64> = idx
                    .iter()
                    .zip(c)
                    .map(|(&i, ci)| ci + 6.0 * sd * (2.0 * i as f64 / (steps - 1) as f64 - 1.0))
                    .collect();
                probe(&w);
                let mut k = 0;
                while k < s {
                    idx[k] += 1;
                    if idx[k] < steps {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == s {
                    break;
                }
            }
        }
    } else {
        let mut rng = block_rng(seed ^ 0x9e37_79b9_7f4a_7c15, 0);
        for c in &env.centers {
            for _ in 0..20_000 {
                let w: Vec<f64> = c.iter().map(|ci| ci + sd * rng.sample::<f64, _>(StandardNormal)).collect();
                probe(&w);
            }
        }
    }
    for c in env.centers.clone() {
        probe(&c);
    }
    env.ln_k = best + 2f64.ln();
    env
}

/// Draws `count` samples: `w` from the mixing density by rejection against
/// a Gaussian-mixture envelope centered at its modes, then `n` i.i.d. spins
/// from `P_w`. Deterministic given `seed`.
pub fn sample_mixture(model: &MixtureModel, count: usize, seed: u64) -> Result<SampleSet> {
    let env = build_envelope(model, seed);
    let n = model.n;
    let blocks = count.div_ceil(BLOCK);
    let cap = (1.0 / MIN_ACCEPTANCE) as u64;
    let results: Vec<Result<(Vec<Draw>, u64, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let want = BLOCK.min(count - b * BLOCK);
            let mut draws = Vec::with_capacity(want);
            let mut proposals = 0u64;
            let mut max_ratio = 0.0f64;
            while draws.len() < want {
                let c = &env.centers[rng.random_range(0..env.centers.len())];
                let sd = env.var.sqrt();
                let w: Vec<f64> = c.iter().map(|ci| ci + sd * rng.sample::<f64, _>(StandardNormal)).collect();
                proposals += 1;
                let lr = model.log_density(&w) - env.ln_g(&w) - env.ln_k;
                max_ratio = max_ratio.max(lr.exp());
                if rng.random::<f64>().ln() < lr {
                    let spins = draw_spins(&model.base, &w, n, &mut rng);
                    draws.push(Draw { w, spins });
                } else if proposals > cap * (draws.len() as u64 + 1) {
                    return Err(Error::EnvelopeFailure(draws.len() as f64 / proposals as f64));
                }
            }
            Ok((draws, proposals, max_ratio))
        })
        .collect();
    let mut draws = Vec::with_capacity(count);
    let mut proposals = 0;
    let mut max_ratio = 0.0f64;
    for r in results {
        let (d, p, m) = r?;
        draws.extend(d);
        proposals += p;
        max_ratio = max_ratio.max(m);
    }
    Ok(SampleSet {
        acceptance_rate: if proposals > 0 { count as f64 / proposals as f64 } else { 1.0 },
        draws,
        proposals,
        max_ratio,
        envelope_centers: env.centers,
        envelope_variance: env.var,
    })
}

fn draw_spins(base: &BaseMeasure, w: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Spins {
    match base {
        BaseMeasure::Atoms { .. } => {
            let p = base.tilted_probs(w).unwrap();
            let v = (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (i, pi) in p.iter().enumerate() {
                        acc += pi;
                        if u < acc {
                            return i;
                        }
                    }
                    p.len() - 1
                })
                .collect();
            Spins::Atoms(v)
        }
        BaseMeasure::Sphere { radius, field } => {
            let t: Vec<f64> = field.iter().zip(w).map(|(b, x)| b + radius * x).collect();
            Spins::Sphere((0..n).map(|_| sample_vmf(&t, rng)).collect())
        }
    }
}

/// Von Mises-Fisher draw with natural parameter `t` (mean direction
/// `t/|t|`, concentration `|t|`) by Wood's rejection scheme.
pub fn sample_vmf<R: Rng>(t: &[f64], rng: &mut R) -> Vec<f64> {
    let d = t.len();
    let kappa = norm(t);
    let uniform = |rng: &mut R| -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let r = norm(&v);
            if r > 0.0 {
                return v.iter().map(|x| x / r).collect();
            }
        }
    };
    if kappa < 1e-12 {
        return uniform(rng);
    }
    let dm1 = (d - 1) as f64;
    // b = (-2k + sqrt(4k^2 + (d-1)^2)) / (d-1), in a cancellation-free form
    let b = dm1 / (2.0 * kappa + (4.0 * kappa * kappa + dm1 * dm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + dm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(dm1 / 2.0, dm1 / 2.0).expect("positive shape");
    let wcos = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + dm1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    // tangent direction orthogonal to e_1, then reflect e_1 onto the mean
    let mut v: Vec<f64> = if d == 1 { vec![] } else { uniform_sub(d - 1, rng) };
    let st = (1.0 - wcos * wcos).max(0.0).sqrt();
    let mut x = Vec::with_capacity(d);
    x.push(wcos);
    x.extend(v.drain(..).map(|y| st * y));
    let mu: Vec<f64> = t.iter().map(|y| y / kappa).collect();
    householder_e1_to(&mu, &x)
}

fn uniform_sub<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 0.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Applies the reflection that maps `e_1` to the unit vector `mu`.
fn householder_e1_to(mu: &[f64], x: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = mu.to_vec();
    u[0] -= 1.0;
    let un2 = dot(&u, &u);
    if un2 < 1e-300 {
        return x.to_vec();
    }
    // H = I - 2 u u^T / |u|^2 maps e_1 to mu since mu - e_1 ∥ u
    let f = 2.0 * dot(&u, x) / un2;
    x.iter().zip(&u).map(|(a, b)| a - f * b).collect()
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

fn chi_square(stat: f64, df: usize) -> TestResult {
    let p = if df == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat)
    };
    TestResult { statistic: stat, df, p_value: p }
}

/// Pearson goodness of fit of `counts` to the probabilities `p`.
pub fn goodness_of_fit(counts: &[u64], p: &[f64]) -> TestResult {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &pi) in counts.iter().zip(p) {
        let e = pi * total as f64;
        if e > 0.0 {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    chi_square(stat, cells.max(1) - 1)
}

/// Bowker's test that a square contingency table is symmetric.
pub fn symmetry_test(table: &[Vec<u64>]) -> TestResult {
    let mut stat = 0.0;
    let mut df = 0;
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            let (a, b) = (table[i][j] as f64, table[j][i] as f64);
            if a + b > 0.0 {
                stat += (a - b).powi(2) / (a + b);
                df += 1;
            }
        }
    }
    chi_square(stat, df)
}

/// Joint counts of the values at sites `a` and `b`.
pub fn pair_table(configs: &[Vec<usize>], a: usize, b: usize, states: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; states]; states];
    for c in configs {
        t[c[a]][c[b]] += 1;
    }
    t
}

/// Tests that type vectors are equally frequent within each orbit of the
/// cyclic relabeling `i -> i + 1 mod q`.
pub fn cyclic_invariance_test(configs: &[Vec<usize>], states: usize) -> TestResult {
    let mut freq: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for c in configs {
        let mut t = vec![0usize; states];
        for &x in c {
            t[x] += 1;
        }
        *freq.entry(t).or_default() += 1;
    }
    let n = configs.first().map_or(0, |c| c.len());
    let mut seen: BTreeMap<Vec<usize>, bool> = BTreeMap::new();
    let mut stat = 0.0;
    let mut df = 0;
    for t in compositions(n, states) {
        if seen.contains_key(&t) {
            continue;
        }
        let mut orbit = vec![t.clone()];
        let mut cur = t.clone();
        loop {
            cur.rotate_right(1);
            if cur == t {
                break;
            }
            if !orbit.contains(&cur) {
                orbit.push(cur.clone());
            }
        }
        for o in &orbit {
            seen.insert(o.clone(), true);
        }
        let counts: Vec<f64> = orbit.iter().map(|o| *freq.get(o).unwrap_or(&0) as f64).collect();
        let total: f64 = counts.iter().sum();
        if total > 0.0 && orbit.len() > 1 {
            let e = total / orbit.len() as f64;
            stat += counts.iter().map(|c| (c - e).powi(2) / e).sum::<f64>();
            df += orbit.len() - 1;
        }
    }
    chi_square(stat, df)
}
