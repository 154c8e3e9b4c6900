//! Small dense linear programs in standard form
//!
//! ```text
//! minimize  cᵀx   subject to  A x = b,  x ≥ 0
//! ```
//!
//! with few rows and many columns, which is the shape of every pointwise
//! convexification problem. Revised simplex with an explicit basis inverse
//! recomputed at each pivot (the basis is at most a handful of rows).
//! Pricing is Dantzig's rule with ties to the lowest index; after a run of
//! degenerate pivots the solver switches to Bland's rule for good.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Columns of `A` stored contiguously, `rows` entries each.
#[derive(Clone, Debug)]
pub struct Problem<'a> {
    pub rows: usize,
    pub columns: &'a [f64],
    pub costs: &'a [f64],
    pub rhs: &'a [f64],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub value: f64,
    /// Basic column indices, one per row.
    pub basis: Vec<usize>,
    /// Values of the basic variables, aligned with `basis`.
    pub basic_values: Vec<f64>,
    pub pivots: usize,
}

impl Solution {
    /// `(column, value)` pairs with value above `eps`, sorted by column.
    pub fn support(&self, eps: f64) -> Vec<(usize, f64)> {
        let mut s: Vec<(usize, f64)> = self
            .basis
            .iter()
            .zip(&self.basic_values)
            .filter(|(_, &v)| v > eps)
            .map(|(&j, &v)| (j, v))
            .collect();
        s.sort_by_key(|&(j, _)| j);
        s
    }
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 64;

impl<'a> Problem<'a> {
    pub fn n_columns(&self) -> usize {
        self.costs.len()
    }

    fn check(&self) -> Result<()> {
        if self.rows == 0 || self.rhs.len() != self.rows || self.columns.len() != self.rows * self.costs.len() {
            return Err(Error::InvalidArgument("inconsistent LP dimensions"));
        }
        Ok(())
    }

    /// Two-phase simplex from an all-artificial basis.
    pub fn solve(&self) -> Result<Solution> {
        self.check()?;
        let m = self.rows;
        let n = self.n_columns();
        // Flip rows so the right-hand side is nonnegative, then append
        // one artificial column per row.
        let sign: Vec<f64> = self.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut cols = Vec::with_capacity((n + m) * m);
        for j in 0..n {
            for i in 0..m {
                cols.push(sign[i] * self.columns[j * m + i]);
            }
        }
        for r in 0..m {
            for i in 0..m {
                cols.push(if i == r { 1.0 } else { 0.0 });
            }
        }
        let rhs: Vec<f64> = self.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect();
        let mut phase1_costs = vec![0.0; n + m];
        for c in &mut phase1_costs[n..] {
            *c = 1.0;
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        let mut pivots = 0;
        let tab = Tableau::new(m, &cols, &rhs);
        pivots += tab.run(&phase1_costs, &mut basis, n + m)?;
        let infeas: f64 = tab.values(&basis)?.iter().zip(&basis).filter(|(_, &j)| j >= n).map(|(v, _)| *v).sum();
        let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(libm::fabs(*b)));
        if infeas > 1e-9 * scale {
            return Err(Error::Infeasible);
        }
        // Drive zero-level artificials out where a structural column can replace them.
        for r in 0..m {
            if basis[r] < n {
                continue;
            }
            let binv = tab.inverse(&basis)?;
            let replacement = (0..n).filter(|j| !basis.contains(j)).find(|&j| {
                let w: f64 = (0..m).map(|k| binv[r * m + k] * cols[j * m + k]).sum();
                libm::fabs(w) > 1e-9
            });
            if let Some(j) = replacement {
                basis[r] = j;
                pivots += 1;
            }
        }
        let mut costs = vec![0.0; n + m];
        costs[..n].copy_from_slice(self.costs);
        // Artificials left in the basis sit on redundant rows; `n` caps
        // entering candidates to structural columns.
        pivots += tab.run(&costs, &mut basis, n)?;
        self.finish(&tab, basis, pivots, n)
    }

    /// Primal simplex from a caller-supplied feasible basis.
    pub fn solve_from(&self, start: &[usize]) -> Result<Solution> {
        self.check()?;
        let n = self.n_columns();
        if start.len() != self.rows || start.iter().any(|&j| j >= n) {
            return Err(Error::InvalidArgument("starting basis"));
        }
        let mut basis = start.to_vec();
        let tab = Tableau::new(self.rows, self.columns, self.rhs);
        if tab.values(&basis)?.iter().any(|&v| v < -1e-9) {
            return Err(Error::InvalidArgument("starting basis is not primal feasible"));
        }
        let pivots = tab.run(self.costs, &mut basis, n)?;
        self.finish(&tab, basis, pivots, n)
    }

    fn finish(&self, tab: &Tableau<'_>, basis: Vec<usize>, pivots: usize, n: usize) -> Result<Solution> {
        let values = tab.values(&basis)?;
        let mut value = 0.0;
        let mut out_basis = Vec::with_capacity(basis.len());
        let mut out_values = Vec::with_capacity(basis.len());
        for (&j, &v) in basis.iter().zip(&values) {
            let v = v.max(0.0);
            if j < n {
                value += self.costs[j] * v;
                out_basis.push(j);
                out_values.push(v);
            }
        }
        Ok(Solution { value, basis: out_basis, basic_values: out_values, pivots })
    }
}

struct Tableau<'a> {
    m: usize,
    cols: &'a [f64],
    rhs: &'a [f64],
}

impl<'a> Tableau<'a> {
    fn new(m: usize, cols: &'a [f64], rhs: &'a [f64]) -> Self {
        Tableau { m, cols, rhs }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.cols[j * self.m..(j + 1) * self.m]
    }

    /// Row-major inverse of the basis matrix by Gauss-Jordan elimination.
    fn inverse(&self, basis: &[usize]) -> Result<Vec<f64>> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (c, &j) in basis.iter().enumerate() {
            for (r, &v) in self.col(j).iter().enumerate() {
                a[r * m + c] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&x, &y| libm::fabs(a[x * m + c]).total_cmp(&libm::fabs(a[y * m + c])))
                .unwrap_or(c);
            if libm::fabs(a[piv * m + c]) < 1e-14 {
                return Err(Error::InvalidArgument("singular basis"));
            }
            if piv != c {
                for k in 0..m {
                    a.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    fn values(&self, basis: &[usize]) -> Result<Vec<f64>> {
        let inv = self.inverse(basis)?;
        let m = self.m;
        Ok((0..m).map(|r| (0..m).map(|k| inv[r * m + k] * self.rhs[k]).sum()).collect())
    }

    /// Runs primal simplex iterations with entering candidates `0..enter_limit`.
    fn run(&self, costs: &[f64], basis: &mut [usize], enter_limit: usize) -> Result<usize> {
        let m = self.m;
        let n_total = costs.len();
        let cost_scale = 1.0 + costs[..enter_limit].iter().fold(0.0f64, |a, c| a.max(libm::fabs(*c)));
        let tol = 1e-12 * cost_scale;
        let max_pivots = 50 * (n_total + m) + 1000;
        let mut is_basic = vec![false; n_total];
        for &j in basis.iter() {
            is_basic[j] = true;
        }
        let mut bland = false;
        let mut degenerate = 0;
        let mut y = vec![0.0; m];
        for pivots in 0..max_pivots {
            let inv = self.inverse(basis)?;
            let x: Vec<f64> = (0..m).map(|r| (0..m).map(|k| inv[r * m + k] * self.rhs[k]).sum()).collect();
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = (0..m).map(|r| costs[basis[r]] * inv[r * m + k]).sum();
            }
            let mut entering = None;
            let mut best = -tol;
            for j in 0..enter_limit {
                if is_basic[j] {
                    continue;
                }
                let col = self.col(j);
                let mut d = costs[j];
                for k in 0..m {
                    d -= y[k] * col[k];
                }
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(pivots);
            };
            let col = self.col(q);
            let w: Vec<f64> = (0..m).map(|r| (0..m).map(|k| inv[r * m + k] * col[k]).sum()).collect();
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                if w[r] > PIVOT_TOL {
                    let ratio = x[r].max(0.0) / w[r];
                    let take = match leave {
                        None => true,
                        Some((lr, lratio)) => ratio < lratio || (ratio == lratio && basis[r] < basis[lr]),
                    };
                    if take {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio <= 0.0 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            is_basic[basis[r]] = false;
            is_basic[q] = true;
            basis[r] = q;
        }
        Err(Error::IterationLimit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns(rows: &[&[f64]]) -> Vec<f64> {
        // rows given row-wise; convert to column storage
        let m = rows.len();
        let n = rows[0].len();
        let mut out = Vec::with_capacity(m * n);
        for j in 0..n {
            for r in rows {
                out.push(r[j]);
            }
        }
        out
    }

    #[test]
    fn textbook_problem() {
        // min −3x1 − 5x2  s.t. x1 + s1 = 4, 2x2 + s2 = 12, 3x1 + 2x2 + s3 = 18
        let cols = columns(&[
            &[1.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 2.0, 0.0, 1.0, 0.0],
            &[3.0, 2.0, 0.0, 0.0, 1.0],
        ]);
        let costs = [-3.0, -5.0, 0.0, 0.0, 0.0];
        let rhs = [4.0, 12.0, 18.0];
        let p = Problem { rows: 3, columns: &cols, costs: &costs, rhs: &rhs };
        let s = p.solve().unwrap();
        assert!((s.value + 36.0).abs() < 1e-12);
        let s2 = p.solve_from(&[2, 3, 4]).unwrap();
        assert!((s2.value + 36.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x1 + x2 = −1 with x ≥ 0 is infeasible.
        let cols = columns(&[&[1.0, 1.0]]);
        let p = Problem { rows: 1, columns: &cols, costs: &[1.0, 1.0], rhs: &[-1.0] };
        assert_eq!(p.solve(), Err(Error::Infeasible));
        // x1 − x2 = 0, min −x1 is unbounded.
        let cols = columns(&[&[1.0, -1.0]]);
        let p = Problem { rows: 1, columns: &cols, costs: &[-1.0, 0.0], rhs: &[0.0] };
        assert_eq!(p.solve(), Err(Error::Unbounded));
    }

    #[test]
    fn redundant_rows() {
        // Second row duplicates the first.
        let cols = columns(&[&[1.0, 1.0, 1.0], &[2.0, 2.0, 2.0]]);
        let p = Problem { rows: 2, columns: &cols, costs: &[3.0, 1.0, 2.0], rhs: &[1.0, 2.0] };
        let s = p.solve().unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.support(1e-12), vec![(1, 1.0)]);
    }

    #[test]
    fn one_dimensional_lower_hull() {
        // Convexify t ↦ (t² − 1)² at t = 0 over samples in [−2, 2].
        let ts: Vec<f64> = (-20..=20).map(|i| i as f64 / 10.0).collect();
        let mut cols = Vec::new();
        let mut costs = Vec::new();
        for &t in &ts {
            cols.extend_from_slice(&[1.0, t]);
            costs.push((t * t - 1.0) * (t * t - 1.0));
        }
        let p = Problem { rows: 2, columns: &cols, costs: &costs, rhs: &[1.0, 0.0] };
        let s = p.solve().unwrap();
        assert!(s.value.abs() < 1e-12);
        let start = p.solve_from(&[20, 21]).unwrap();
        assert!(start.value.abs() < 1e-12);
    }
}
