//! Phase-one simplex for `A x = b, x >= 0` with Bland's rule.
//!
//! Works over any [`Scalar`]; in exact mode the answer is exact. When the
//! system is infeasible the final simplex multipliers give a Farkas vector
//! `y` with `y^T A <= 0` columnwise and `y^T b > 0`.

use crate::scalar::{Scalar, Sign};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Feasible(Vec<T>),
    /// Farkas multipliers, one per row.
    Infeasible(Vec<T>),
}

/// Solves the phase-one problem. `a` has one row per constraint.
pub fn phase_one<T: Scalar>(a: &[Vec<T>], b: &[T], tol: f64) -> LpOutcome<T> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let width = cols + rows + 1;
    let rhs = width - 1;
    let mut flip = vec![false; rows];
    let mut t: Vec<Vec<T>> = Vec::with_capacity(rows);
    for i in 0..rows {
        flip[i] = b[i].is_negative();
        let s = |x: &T| if flip[i] { -x.clone() } else { x.clone() };
        let mut row: Vec<T> = a[i].iter().map(s).collect();
        row.extend((0..rows).map(|k| if k == i { T::one() } else { T::zero() }));
        row.push(s(&b[i]));
        t.push(row);
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    // Reduced costs of the phase-one objective (sum of artificials).
    let mut cost: Vec<T> = (0..width)
        .map(|j| {
            if (cols..cols + rows).contains(&j) {
                T::zero()
            } else {
                -(0..rows).map(|i| t[i][j].clone()).sum::<T>()
            }
        })
        .collect();

    loop {
        let entering = (0..cols + rows).find(|&j| cost[j].sign(tol) == Sign::Negative);
        let Some(e) = entering else { break };
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            if t[i][e].sign(tol) != Sign::Positive {
                continue;
            }
            leave = match leave {
                None => Some(i),
                Some(p) => {
                    let ri = t[i][rhs].clone() / t[i][e].clone();
                    let rp = t[p][rhs].clone() / t[p][e].clone();
                    let d = (ri - rp).sign(tol);
                    if d == Sign::Negative || (d == Sign::Zero && basis[i] < basis[p]) {
                        Some(i)
                    } else {
                        Some(p)
                    }
                }
            };
        }
        // The phase-one objective is bounded below, so a ratio row exists.
        let Some(r) = leave else { break };
        let piv = t[r][e].clone();
        for x in t[r].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == r || row[e].is_zero() {
                continue;
            }
            let f = row[e].clone();
            for (x, p) in row.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
        }
        let f = cost[e].clone();
        for (x, p) in cost.iter_mut().zip(&prow) {
            if !p.is_zero() {
                *x = x.clone() - f.clone() * p.clone();
            }
        }
        basis[r] = e;
    }

    let objective: T = (0..rows)
        .filter(|&i| basis[i] >= cols)
        .map(|i| t[i][rhs].clone())
        .sum();
    if objective.sign(tol) == Sign::Positive {
        // Multipliers y = c_B B^{-1}; artificial column k of the tableau holds
        // B^{-1} e_k and its reduced cost is 1 - y_k.
        let y = (0..rows)
            .map(|k| {
                let yk = T::one() - cost[cols + k].clone();
                if flip[k] {
                    -yk
                } else {
                    yk
                }
            })
            .collect();
        return LpOutcome::Infeasible(y);
    }
    let mut x = vec![T::zero(); cols];
    for i in 0..rows {
        if basis[i] < cols {
            x[basis[i]] = t[i][rhs].clone();
        }
    }
    LpOutcome::Feasible(x)
}
