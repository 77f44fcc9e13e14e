//! Dense two-phase primal simplex for small equality-form LPs.
//!
//! Solves `min c.x  s.t.  A x = b, x >= 0` with Bland's rule. Sized for the
//! transport relaxation (a dozen constraints, a hundred-odd variables); no
//! sparsity, no revised factorizations.

use crate::error::{Error, Result};

const ENTER_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-7;

pub(crate) fn solve_min(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<f64> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter("inconsistent LP shape".into()));
    }
    if m == 0 {
        return Ok(0.0);
    }

    // Tableau over n structural + m artificial columns, rhs last.
    let cols = n + m;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][cols] = flip * b[i];
        basis[i] = n + i;
    }

    // Phase 1: minimize the sum of artificials.
    let phase1: Vec<f64> = (0..cols).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    let obj1 = run(&mut t, &mut basis, &phase1, cols, |_| true)?;
    if obj1 > FEAS_TOL {
        return Err(Error::Numerical(format!(
            "LP infeasible: phase-1 objective {obj1:.3e}"
        )));
    }

    // Drive lingering artificials out of the basis where a structural pivot
    // exists; rows without one are redundant constraints and stay inert.
    for row in 0..m {
        if basis[row] >= n {
            if let Some(col) = (0..n).find(|&j| t[row][j].abs() > PIVOT_TOL) {
                pivot(&mut t, &mut basis, row, col, cols);
            }
        }
    }

    // Phase 2 over structural columns only.
    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, cols, |j| j < n)
}

/// Runs simplex iterations until optimality; returns the objective value.
fn run(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    cols: usize,
    allowed: impl Fn(usize) -> bool,
) -> Result<f64> {
    let m = t.len();
    loop {
        // Reduced costs r_j = c_j - c_B . T_j; recomputed each iteration,
        // which is cheap at this size and immune to drift.
        let mut entering = None;
        for j in 0..cols {
            if !allowed(j) || basis.contains(&j) {
                continue;
            }
            let mut r = cost[j];
            for i in 0..m {
                r -= cost[basis[i]] * t[i][j];
            }
            if r < -ENTER_TOL {
                entering = Some(j);
                break; // Bland: smallest eligible index.
            }
        }
        let Some(col) = entering else {
            let mut obj = 0.0;
            for i in 0..m {
                obj += cost[basis[i]] * t[i][cols];
            }
            return Ok(obj);
        };

        let mut row: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_TOL {
                let ratio = t[i][cols] / t[i][col];
                let better = match row {
                    None => true,
                    // Bland tie-break on the leaving variable index.
                    Some(r) => {
                        ratio < best - 1e-12 || (ratio < best + 1e-12 && basis[i] < basis[r])
                    }
                };
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let Some(row) = row else {
            return Err(Error::Numerical("LP unbounded below".into()));
        };
        pivot(t, basis, row, col, cols);
    }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, _cols: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let factor = r[col];
        if factor == 0.0 {
            continue;
        }
        for (v, p) in r.iter_mut().zip(&pivot_row) {
            *v -= factor * p;
        }
    }
    basis[row] = col;
}
