//! Small dense symmetric-matrix tools: determinants, bordered minors,
//! positive (semi)definiteness, Hankel moment matrices, Jacobi's
//! sum-of-squares form, Stirling matrices and a closed form for Curie-Weiss
//! Hankel minors.

use nalgebra::DMatrix;
use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{binom, Scalar, Sign};

/// Row-major square matrix.
pub type Matrix<T> = Vec<Vec<T>>;

/// Determinant by Gaussian elimination. Exact mode pivots on the first
/// nonzero entry, float mode on the largest.
pub fn determinant<T: Scalar>(m: &Matrix<T>) -> T {
    let d = m.len();
    let mut a = m.clone();
    let mut det = T::one();
    for col in 0..d {
        let pivot = if T::EXACT {
            (col..d).find(|&r| !a[r][col].is_zero())
        } else {
            (col..d)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .filter(|&r| !a[r][col].is_zero())
        };
        let Some(p) = pivot else {
            return T::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let piv = a[col][col].clone();
        det = det * piv.clone();
        for r in col + 1..d {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / piv.clone();
            for c in col..d {
                let t = f.clone() * a[col][c].clone();
                a[r][c] = a[r][c].clone() - t;
            }
        }
    }
    det
}

/// Bordered minor: determinant of rows `0..k` plus row `i` against columns
/// `0..k` plus column `j`. `k = 0` gives the entry itself.
pub fn bordered_minor<T: Scalar>(m: &Matrix<T>, k: usize, i: usize, j: usize) -> T {
    let rows: Vec<usize> = (0..k).chain(std::iter::once(i)).collect();
    let cols: Vec<usize> = (0..k).chain(std::iter::once(j)).collect();
    let sub = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect())
        .collect();
    determinant(&sub)
}

/// Leading principal minor of order `k + 1`, with order zero equal to one.
pub fn leading_minor<T: Scalar>(m: &Matrix<T>, order: usize) -> T {
    if order == 0 {
        return T::one();
    }
    bordered_minor(m, order - 1, order - 1, order - 1)
}

/// Definiteness class of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Definiteness {
    PositiveDefinite,
    /// Positive semidefinite with a nontrivial kernel. In float mode this
    /// also covers "within tolerance of singular".
    PsdSingular,
    Indefinite,
}

/// Classifies a symmetric matrix. Exact mode uses symmetric elimination with
/// positive diagonal pivots; float mode uses eigenvalues against
/// `tol * max(1, max |entry|)`.
pub fn classify<T: Scalar>(m: &Matrix<T>, tol: f64) -> Definiteness {
    if m.is_empty() {
        return Definiteness::PositiveDefinite;
    }
    if T::EXACT {
        classify_exact(m)
    } else {
        classify_float(m, tol)
    }
}

fn classify_exact<T: Scalar>(m: &Matrix<T>) -> Definiteness {
    let mut a = m.clone();
    let mut live: Vec<usize> = (0..a.len()).collect();
    while !live.is_empty() {
        if live.iter().any(|&i| a[i][i].is_negative()) {
            return Definiteness::Indefinite;
        }
        let Some(pos) = live.iter().position(|&i| a[i][i].is_positive()) else {
            let off = live
                .iter()
                .any(|&i| live.iter().any(|&j| i != j && !a[i][j].is_zero()));
            return if off {
                Definiteness::Indefinite
            } else {
                Definiteness::PsdSingular
            };
        };
        let p = live.remove(pos);
        let piv = a[p][p].clone();
        for &i in &live {
            let f = a[i][p].clone() / piv.clone();
            if f.is_zero() {
                continue;
            }
            for &j in &live {
                let t = f.clone() * a[p][j].clone();
                a[i][j] = a[i][j].clone() - t;
            }
        }
    }
    Definiteness::PositiveDefinite
}

fn classify_float<T: Scalar>(m: &Matrix<T>, tol: f64) -> Definiteness {
    let d = m.len();
    let dm = DMatrix::from_fn(d, d, |i, j| m[i][j].to_f64());
    let scale = dm.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let eig = dm.symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    match lo.sign(tol * scale) {
        Sign::Positive => Definiteness::PositiveDefinite,
        Sign::Zero => Definiteness::PsdSingular,
        Sign::Negative => Definiteness::Indefinite,
    }
}

/// Which interval the moments live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HankelVariant {
    /// Moments of a law on `[0, 1]`.
    Unit,
    /// Moments of a law on `[0, l]`.
    Interval(u64),
}

/// The two Hankel matrices whose positive semidefiniteness characterizes
/// moment sequences `v[0..=n]` on `[0, 1]` (or `[0, l]`).
///
/// Even `n = 2m`: `(v[i+j])` for `i, j <= m` and `(L v[i+j+1] - v[i+j+2])`
/// for `i, j < m`, with `L` the right end point.
/// Odd `n = 2m + 1`: `(v[i+j+1])` and `(L v[i+j] - v[i+j+1])` for `i, j <= m`.
pub fn hankel_pair<T: Scalar>(v: &[T], variant: HankelVariant) -> (Matrix<T>, Matrix<T>) {
    let n = v.len() - 1;
    let end = match variant {
        HankelVariant::Unit => T::one(),
        HankelVariant::Interval(l) => T::from_i64(l as i64),
    };
    let m = n / 2;
    if n % 2 == 0 {
        let a = (0..=m).map(|i| (0..=m).map(|j| v[i + j].clone()).collect()).collect();
        let b = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| end.clone() * v[i + j + 1].clone() - v[i + j + 2].clone())
                    .collect()
            })
            .collect();
        (a, b)
    } else {
        let a = (0..=m).map(|i| (0..=m).map(|j| v[i + j + 1].clone()).collect()).collect();
        let b = (0..=m)
            .map(|i| {
                (0..=m)
                    .map(|j| end.clone() * v[i + j].clone() - v[i + j + 1].clone())
                    .collect()
            })
            .collect();
        (a, b)
    }
}

/// Definiteness of both Hankel matrices.
pub fn hankel_verdicts<T: Scalar>(v: &[T], variant: HankelVariant, tol: f64) -> (Definiteness, Definiteness) {
    let (a, b) = hankel_pair(v, variant);
    (classify(&a, tol), classify(&b, tol))
}

/// Hankel minor `det(seq[start + i + j])` for `i, j = 0..=k`.
pub fn hankel_minor<T: Scalar>(seq: &[T], start: usize, k: usize) -> T {
    let m = (0..=k)
        .map(|i| (0..=k).map(|j| seq[start + i + j].clone()).collect())
        .collect();
    determinant(&m)
}

/// Sum of squares form of a quadratic form with nonvanishing leading minors:
/// `z^T C z = sum_k (sum_{i >= k} coeffs[k][i - k] z_i)^2 / denominators[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiForm<T> {
    /// `coeffs[k][i - k]` is the bordered minor with border `(i, k)`.
    pub coeffs: Vec<Vec<T>>,
    /// Product of consecutive leading minors.
    pub denominators: Vec<T>,
}

impl<T: Scalar> JacobiForm<T> {
    /// Expands the sum of squares back into a symmetric coefficient matrix.
    pub fn expand(&self) -> Matrix<T> {
        let d = self.coeffs.len();
        let mut out = vec![vec![T::zero(); d]; d];
        for (k, (row, den)) in self.coeffs.iter().zip(&self.denominators).enumerate() {
            for (a, ca) in row.iter().enumerate() {
                for (b, cb) in row.iter().enumerate() {
                    let t = ca.clone() * cb.clone() / den.clone();
                    out[k + a][k + b] = out[k + a][k + b].clone() + t;
                }
            }
        }
        out
    }
}

/// Jacobi's decomposition of a symmetric quadratic form into squares of
/// linear forms. Fails if a leading principal minor vanishes.
pub fn jacobi_decompose<T: Scalar>(m: &Matrix<T>, tol: f64) -> Result<JacobiForm<T>> {
    let d = m.len();
    let mut coeffs = Vec::with_capacity(d);
    let mut denominators = Vec::with_capacity(d);
    let mut prev = T::one();
    for k in 0..d {
        let ckk = bordered_minor(m, k, k, k);
        if ckk.sign(tol) == Sign::Zero {
            return Err(Error::SingularMinor(k + 1));
        }
        coeffs.push((k..d).map(|i| bordered_minor(m, k, i, k)).collect());
        denominators.push(ckk.clone() * prev);
        prev = ckk;
    }
    Ok(JacobiForm { coeffs, denominators })
}

/// Checks the Sylvester determinant identity
/// `c^k_kk c^k_ij - c^k_ik c^k_kj = c^{k-1}_{k-1,k-1} c^{k+1}_ij`
/// for every `k` and every `i, j >= k`. Returns the first failing triple.
pub fn sylvester_check<T: Scalar>(m: &Matrix<T>, tol: f64) -> std::result::Result<(), (usize, usize, usize)> {
    let d = m.len();
    for k in 0..d {
        let prev = leading_minor(m, k);
        let ckk = bordered_minor(m, k, k, k);
        for i in k..d {
            for j in k..d {
                let lhs = ckk.clone() * bordered_minor(m, k, i, j)
                    - bordered_minor(m, k, i, k) * bordered_minor(m, k, k, j);
                let next = if i == k || j == k {
                    T::zero()
                } else {
                    bordered_minor(m, k + 1, i, j)
                };
                let diff = lhs - prev.clone() * next;
                if diff.sign(tol) != Sign::Zero {
                    return Err((k, i, j));
                }
            }
        }
    }
    Ok(())
}

/// Lower triangular Stirling matrices of size `size`: `g` holds signed
/// numbers of the first kind (falling factorial to powers), `h` numbers of
/// the second kind (powers to falling factorials). They are inverse to each
/// other.
pub fn stirling_matrices(size: usize) -> (Matrix<BigInt>, Matrix<BigInt>) {
    let mut g = vec![vec![BigInt::zero(); size]; size];
    let mut h = vec![vec![BigInt::zero(); size]; size];
    if size == 0 {
        return (g, h);
    }
    g[0][0] = BigInt::one();
    h[0][0] = BigInt::one();
    for i in 0..size - 1 {
        for j in 0..=i + 1 {
            let left_g = if j > 0 { g[i][j - 1].clone() } else { BigInt::zero() };
            let left_h = if j > 0 { h[i][j - 1].clone() } else { BigInt::zero() };
            g[i + 1][j] = left_g - BigInt::from(i) * &g[i][j];
            h[i + 1][j] = left_h + BigInt::from(j) * &h[i][j];
        }
    }
    (g, h)
}

/// Closed form of the Curie-Weiss Hankel minor `det(u[n-2k+i+j])`,
/// `i, j = 0..=k`, where `u[j] = a^j b^{j(n-j)} / s` and
/// `s = sum_j C(n,j) a^j b^{j(n-j)}`.
pub fn vandermonde_closed_form<T: Scalar>(a: &T, b: &T, n: usize, k: usize) -> Result<T> {
    if 2 * k > n {
        return domain(format!("need 2k <= n, got k = {k}, n = {n}"));
    }
    if !a.is_positive() || !b.is_positive() {
        return domain("a and b must be positive");
    }
    let (ni, ki) = (n as i64, k as i64);
    let s: T = (0..=ni)
        .map(|j| binom::<T>(ni, j) * a.powi(j) * b.powi(j * (ni - j)))
        .sum();
    let b_exp = ki * (ki + 1) * (3 * ni - 2 * ki - 1) / 3;
    let mut out = a.powi((ki + 1) * (ni - ki)) * b.powi(b_exp) / s.powi(ki + 1);
    for l in 0..=ki {
        for j in 0..l {
            out = out * (b.powi(-2 * l) - b.powi(-2 * j));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{u_to_v, CountDistribution};
    use num::BigRational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn mat(rows: &[&[i64]]) -> Matrix<BigRational> {
        rows.iter().map(|r| r.iter().map(|&x| q(x, 1)).collect()).collect()
    }

    #[test]
    fn determinant_small() {
        assert_eq!(determinant(&mat(&[&[2, 1], &[1, 2]])), q(3, 1));
        assert_eq!(determinant(&mat(&[&[0, 1], &[1, 0]])), q(-1, 1));
        assert_eq!(determinant(&mat(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]])), q(0, 1));
        let f: Matrix<f64> = vec![vec![0.0, 2.0], vec![3.0, 1.0]];
        assert!((determinant(&f) + 6.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_two_by_two() {
        let m = mat(&[&[2, 1], &[1, 2]]);
        let j = jacobi_decompose(&m, 0.0).unwrap();
        assert_eq!(j.coeffs, vec![vec![q(2, 1), q(1, 1)], vec![q(3, 1)]]);
        assert_eq!(j.denominators, vec![q(2, 1), q(6, 1)]);
        assert_eq!(j.expand(), m);
        assert_eq!(
            jacobi_decompose(&mat(&[&[0, 1], &[1, 0]]), 0.0),
            Err(Error::SingularMinor(1))
        );
    }

    #[test]
    fn stirling_rows() {
        let (g, h) = stirling_matrices(5);
        let row3: Vec<BigInt> = [0, 2, -3, 1, 0].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(g[3], row3);
        assert_eq!(h[3][2], BigInt::from(3));
        assert_eq!(h[4][2], BigInt::from(7));
        for i in 0..5 {
            for j in 0..5 {
                let p: BigInt = (0..5).map(|k| &g[i][k] * &h[k][j]).sum();
                assert_eq!(p, if i == j { BigInt::one() } else { BigInt::zero() });
            }
        }
    }

    #[test]
    fn hankel_verdict_examples() {
        let pd = hankel_verdicts(&[q(1, 1), q(1, 2), q(3, 8)], HankelVariant::Unit, 0.0);
        assert_eq!(pd, (Definiteness::PositiveDefinite, Definiteness::PositiveDefinite));
        let sing = hankel_verdicts(&[q(1, 1), q(1, 2), q(1, 4)], HankelVariant::Unit, 0.0);
        assert_eq!(sing.0, Definiteness::PsdSingular);
        let bad = hankel_verdicts(&[q(1, 1), q(1, 2), q(1, 5)], HankelVariant::Unit, 0.0);
        assert_eq!(bad.0, Definiteness::Indefinite);
        let badf = hankel_verdicts(&[1.0, 0.5, 0.2], HankelVariant::Unit, 1e-10);
        assert_eq!(badf.0, Definiteness::Indefinite);
        let singf = hankel_verdicts(&[1.0, 0.5, 0.25], HankelVariant::Unit, 1e-10);
        assert_eq!(singf.0, Definiteness::PsdSingular);
    }

    #[test]
    fn classify_zero_diagonal_with_coupling_is_indefinite() {
        assert_eq!(classify(&mat(&[&[1, 0, 0], &[0, 0, 1], &[0, 1, 0]]), 0.0), Definiteness::Indefinite);
        assert_eq!(classify(&mat(&[&[1, 1], &[1, 1]]), 0.0), Definiteness::PsdSingular);
        assert_eq!(classify(&mat(&[&[0, 0], &[0, 3]]), 0.0), Definiteness::PsdSingular);
    }

    #[test]
    fn vandermonde_example() {
        // n = 2, k = 1, a = 1, b = 1/2: s = 1 + 2ab + a^2 = 3 and the minor
        // is u0 u2 - u1^2 = (1 - 1/4) / 9.
        let v = vandermonde_closed_form(&q(1, 1), &q(1, 2), 2, 1).unwrap();
        assert_eq!(v, q(1, 12));
    }

    fn cw_u(a: &BigRational, b: &BigRational, n: usize) -> Vec<BigRational> {
        let w: Vec<BigRational> = (0..=n as i64).map(|j| a.powi(j) * b.powi(j * (n as i64 - j))).collect();
        CountDistribution::from_config_weights(&w).unwrap().config_weights()
    }

    proptest! {
        #[test]
        fn vandermonde_matches_direct(an in 1i64..20, ad in 1i64..20, bn in 1i64..20, bd in 1i64..20, n in 0usize..8) {
            let (a, b) = (q(an, ad), q(bn, bd));
            let u = cw_u(&a, &b, n);
            for k in 0..=n / 2 {
                let direct = hankel_minor(&u, n - 2 * k, k);
                prop_assert_eq!(vandermonde_closed_form(&a, &b, n, k).unwrap(), direct);
            }
        }

        #[test]
        fn hankel_minors_of_u_and_v_agree(ws in prop::collection::vec(1i64..30, 1..9)) {
            let u: Vec<BigRational> = ws.iter().map(|&w| q(w, 1)).collect();
            let v = u_to_v(&u);
            let n = u.len() - 1;
            for k in 0..=n / 2 {
                prop_assert_eq!(hankel_minor(&v, n - 2 * k, k), hankel_minor(&u, n - 2 * k, k));
            }
        }

        #[test]
        fn jacobi_and_sylvester(entries in prop::collection::vec(-9i64..10, 21), d in 1usize..6) {
            let mut m = vec![vec![q(0, 1); d]; d];
            let mut it = entries.iter();
            for i in 0..d {
                for j in i..d {
                    let x = q(*it.next().unwrap(), 1);
                    m[i][j] = x.clone();
                    m[j][i] = x;
                }
            }
            prop_assert!(sylvester_check(&m, 0.0).is_ok());
            if let Ok(j) = jacobi_decompose(&m, 0.0) {
                prop_assert_eq!(j.expand(), m);
            }
        }

        #[test]
        fn exact_and_float_classification_agree_off_boundary(entries in prop::collection::vec(-9i64..10, 10)) {
            let d = 4;
            let mut m = vec![vec![q(0, 1); d]; d];
            let mut it = entries.iter();
            for i in 0..d {
                for j in i..d {
                    let x = q(*it.next().unwrap(), 1);
                    m[i][j] = x.clone();
                    m[j][i] = x;
                }
            }
            let e = classify(&m, 0.0);
            let f = classify(&m.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect(), 1e-10);
            prop_assert_eq!(e, f);
        }
    }
}
