//! Quadrature rules: Gauss-Hermite for Gaussian expectations and adaptive
//! Gauss-Kronrod for (possibly complex) integrands on finite intervals.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use num::complex::Complex64;

use crate::error::{Error, Result};

/// Nodes and weights for `E f(Z)`, `Z ~ N(0, 1)`. Weights sum to one.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite
    /// polynomials for starting nodes, then Newton refinement and weights
    /// `1 / sum_k p_k(x)^2` from the orthonormal recurrence. The recurrence
    /// is rescaled on the fly so tail weights keep full relative accuracy.
    /// Rules are cached per size.
    pub fn new(size: usize) -> std::sync::Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(r) = cache.lock().unwrap().get(&size) {
            return r.clone();
        }
        let jac = DMatrix::from_fn(size, size, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = jac.symmetric_eigenvalues().iter().cloned().collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut weights = Vec::with_capacity(size);
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let (pn, pn1, _) = orthonormal_hermite(size, *x);
                let step = pn / ((size as f64).sqrt() * pn1);
                *x -= step;
                if step.abs() < 1e-15 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, _, log_sum) = orthonormal_hermite(size, *x);
            weights.push(-log_sum);
        }
        let lt = crate::scalar::log_sum_exp(&weights);
        let rule = std::sync::Arc::new(GaussHermite {
            nodes,
            weights: weights.iter().map(|w| (w - lt).exp()).collect(),
        });
        cache.lock().unwrap().insert(size, rule.clone());
        rule
    }

    /// `E f(Z)` for standard normal `Z`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Runs `eval` on Gauss-Hermite rules of 40, 80, 160 and 320 nodes until two
/// successive vectors agree entrywise to `tol` (relative to the largest
/// entry). Returns the finer result.
pub fn hermite_doubling<F>(tol: f64, mut eval: F) -> Result<Vec<f64>>
where
    F: FnMut(&GaussHermite) -> Vec<f64>,
{
    let mut prev: Option<Vec<f64>> = None;
    let mut size = 40;
    while size <= 320 {
        let cur = eval(&GaussHermite::new(size));
        if let Some(p) = &prev {
            let scale = cur.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE);
            let diff = p.iter().zip(&cur).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
            if diff <= tol * scale {
                return Ok(cur);
            }
        }
        prev = Some(cur);
        size *= 2;
    }
    Err(Error::NonConvergence(format!(
        "Gauss-Hermite rule did not stabilize to {tol:e} by 320 nodes"
    )))
}

/// Orthonormal probabilists' Hermite values at `x`: returns `p_n(x)` and
/// `p_{n-1}(x)` sharing a common (unknown) positive scale, and
/// `ln sum_{k<n} p_k(x)^2` unscaled.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    let mut sum = 0.0f64;
    let mut log_scale = 0.0f64;
    for k in 0..n {
        sum += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        let m = cur.abs().max(prev.abs());
        if m > 1e100 {
            cur /= m;
            prev /= m;
            sum /= m * m;
            log_scale += 2.0 * m.ln();
        }
    }
    (cur, prev, sum.ln() + log_scale)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    ((kron * h), ((kron - gauss) * h).norm())
}

/// Adaptive Gauss-Kronrod 7/15 on `[a, b]` with global bisection of the
/// worst panel. Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate(
    f: &dyn Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<(Complex64, f64)> {
    // Start from a uniform split so that narrow features are not missed.
    let init = 16;
    let mut panels: Vec<(f64, f64, Complex64, f64)> = (0..init)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / init as f64;
            let hi = a + (b - a) * (i + 1) as f64 / init as f64;
            let (v, e) = gk15(f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok((total, err));
        }
        if panels.len() >= max_panels {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature error {err:e} after {max_panels} panels"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let g = |x: f64| Complex64::new(f(x), 0.0);
    integrate(&g, a, b, abs_tol, rel_tol, 20_000).map(|(v, e)| (v.re, e))
}
