//! Dense two-phase simplex with Bland's rule, used as an independent oracle
//! for small real l1-analysis problems.
//!
//! Pivot elements smaller than `PIVOT_TOL` are never chosen, reduced costs
//! above `-COST_TOL` count as nonnegative, and phase one declares the problem
//! infeasible when its optimum exceeds `FEAS_TOL` times the right-hand side
//! scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;

struct Tableau {
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    t: DMatrix<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[(r, c)];
        let width = self.t.ncols();
        for k in 0..width {
            self.t[(r, k)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == r {
                continue;
            }
            let f = self.t[(i, c)];
            if f != 0.0 {
                for k in 0..width {
                    let v = self.t[(r, k)];
                    self.t[(i, k)] -= f * v;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimize `cost . x` over the columns allowed by `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<()> {
        let rows = self.t.nrows();
        let rhs = self.cols;
        // Bland's rule terminates; the bound only guards against bugs.
        for _ in 0..100_000 {
            let mut entering = None;
            for j in (0..self.cols).filter(|&j| allowed(j)) {
                if self.basis.contains(&j) {
                    continue;
                }
                let reduced =
                    cost[j] - (0..rows).map(|i| cost[self.basis[i]] * self.t[(i, j)]).sum::<f64>();
                if reduced < -COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..rows {
                let a = self.t[(i, c)];
                if a > PIVOT_TOL {
                    let ratio = self.t[(i, rhs)] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, c);
        }
        Err(Error::NotConverged { iterations: 100_000 })
    }
}

/// `min c.x` subject to `A x = b`, `x >= 0`. Returns the optimal value and a
/// minimizer.
pub fn solve_standard_form(a: &DMatrix<f64>, b: &DVector<f64>, c: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(Error::DimensionMismatch {
            context: "standard-form linear program",
            expected: n,
            found: c.len(),
        });
    }
    // Columns: n originals, m artificials, then rhs.
    let cols = n + m;
    let mut t = DMatrix::<f64>::zeros(m, cols + 1);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, cols)] = sign * b[i];
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        cols,
    };
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);

    let phase1: Vec<f64> = (0..cols).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    tab.optimize(&phase1, &|_| true)?;
    let infeas: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= n)
        .map(|i| tab.t[(i, cols)])
        .sum();
    if infeas > FEAS_TOL * scale {
        return Err(Error::Infeasible);
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are redundant and are dropped.
    let mut keep = vec![true; m];
    for i in 0..m {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.t[(i, j)].abs() > PIVOT_TOL && !tab.basis.contains(&j)) {
                Some(j) => tab.pivot(i, j),
                None => keep[i] = false,
            }
        }
    }
    if keep.iter().any(|k| !k) {
        let rows: Vec<usize> = (0..m).filter(|&i| keep[i]).collect();
        tab.t = tab.t.select_rows(rows.iter());
        tab.basis = rows.iter().map(|&i| tab.basis[i]).collect();
    }

    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, m));
    tab.optimize(&phase2, &|j| j < n)?;
    let mut x = vec![0.0; n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.t[(i, cols)];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok((value, x))
}

/// Largest total variable count accepted by [`lp_oracle`].
pub const MAX_LP_VARIABLES: usize = 200;

/// Exact optimum of `min ||D g||_1` subject to `A g = zeta` for real data,
/// via the split `g = g+ - g-`, `D g = u - v` with all parts nonnegative.
pub fn lp_oracle(d: &DMatrix<f64>, a: &DMatrix<f64>, zeta: &DVector<f64>) -> Result<f64> {
    let n = d.ncols();
    let j = d.nrows();
    let m = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "lp_oracle columns",
            expected: n,
            found: a.ncols(),
        });
    }
    if zeta.len() != m {
        return Err(Error::DimensionMismatch {
            context: "lp_oracle data",
            expected: m,
            found: zeta.len(),
        });
    }
    let vars = 2 * n + 2 * j;
    if vars > MAX_LP_VARIABLES {
        return Err(Error::range(format!(
            "lp_oracle supports at most {MAX_LP_VARIABLES} variables, got {vars}"
        )));
    }
    let mut big = DMatrix::<f64>::zeros(j + m, vars);
    let mut rhs = DVector::<f64>::zeros(j + m);
    for r in 0..j {
        for c in 0..n {
            big[(r, c)] = d[(r, c)];
            big[(r, n + c)] = -d[(r, c)];
        }
        big[(r, 2 * n + r)] = -1.0;
        big[(r, 2 * n + j + r)] = 1.0;
    }
    for r in 0..m {
        for c in 0..n {
            big[(j + r, c)] = a[(r, c)];
            big[(j + r, n + c)] = -a[(r, c)];
        }
        rhs[j + r] = zeta[r];
    }
    let cost: Vec<f64> = (0..vars).map(|v| if v >= 2 * n { 1.0 } else { 0.0 }).collect();
    solve_standard_form(&big, &rhs, &cost).map(|(v, _)| v)
}
