//! Exact rational simplex for `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The origin is feasible, so a single phase starting from the slack basis
//! suffices. Bland's rule prevents cycling.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::error::{invalid, Error, Result};
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub value: Q,
    pub x: Vec<Q>,
}

pub fn maximize(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> Result<Solution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(invalid!("linear program dimensions disagree"));
    }
    if b.iter().any(|v| v.is_negative()) {
        return Err(invalid!("right-hand side must be nonnegative"));
    }
    let width = n + m;
    let mut rows: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = Vec::with_capacity(width + 1);
            r.extend(row.iter().cloned());
            r.extend((0..m).map(|j| if i == j { Q::from_integer(1.into()) } else { Q::zero() }));
            r.push(b[i].clone());
            r
        })
        .collect();
    // Reduced costs; entry `width` holds minus the current objective value.
    let mut obj: Vec<Q> = c.iter().cloned().chain((0..=m).map(|_| Q::zero())).collect();
    let mut basis: Vec<usize> = (n..width).collect();

    while let Some(enter) = (0..width).find(|&j| obj[j].is_positive()) {
        let mut leave: Option<(usize, Q)> = None;
        for (i, row) in rows.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[width] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((li, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (pivot_row, _) = leave.ok_or_else(|| Error::Unsupported("unbounded linear program".into()))?;
        pivot(&mut rows, &mut obj, pivot_row, enter);
        basis[pivot_row] = enter;
    }

    let mut x = vec![Q::zero(); n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = rows[i][width].clone();
        }
    }
    Ok(Solution { value: -obj[width].clone(), x })
}

fn pivot(rows: &mut [Vec<Q>], obj: &mut [Q], r: usize, col: usize) {
    let p = rows[r][col].clone();
    for v in rows[r].iter_mut() {
        *v = &*v / &p;
    }
    let pivot_row = rows[r].clone();
    for (i, row) in rows.iter_mut().enumerate() {
        if i != r && !row[col].is_zero() {
            let factor = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &factor * pv;
            }
        }
    }
    if !obj[col].is_zero() {
        let factor = obj[col].clone();
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v -= &factor * pv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y  s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → 36 at (2, 6).
        let c = [q(3, 1), q(5, 1)];
        let a = vec![
            vec![q(1, 1), q(0, 1)],
            vec![q(0, 1), q(2, 1)],
            vec![q(3, 1), q(2, 1)],
        ];
        let b = [q(4, 1), q(12, 1), q(18, 1)];
        let sol = maximize(&c, &a, &b).unwrap();
        assert_eq!(sol.value, q(36, 1));
        assert_eq!(sol.x, vec![q(2, 1), q(6, 1)]);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Degenerate vertex at the origin.
        let c = [q(1, 1), q(1, 1)];
        let a = vec![vec![q(1, 1), q(-1, 1)], vec![q(-1, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]];
        let b = [q(0, 1), q(0, 1), q(1, 2)];
        let sol = maximize(&c, &a, &b).unwrap();
        assert_eq!(sol.value, q(1, 1));
    }

    #[test]
    fn unbounded_is_reported() {
        let sol = maximize(&[q(1, 1)], &[vec![q(-1, 1)]], &[q(0, 1)]);
        assert!(sol.is_err());
    }
}
