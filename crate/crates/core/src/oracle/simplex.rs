//! Revised simplex for `max c'x, Ax = b, x >= 0` where every column has at
//! most two nonzeros. The basis inverse is kept dense and updated by row
//! operations, with a periodic refactorization.
//!
//! Artificial columns are fixed at zero: they may start in the basis, leave
//! at the first pivot whose direction touches their row, and never re-enter.

use crate::error::{Error, Result};

/// Reduced costs above this enter the basis.
pub(crate) const PRICE_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-13;
/// Consecutive degenerate pivots, per row, before switching to Bland's rule.
const BLAND_AFTER_PER_ROW: usize = 10;
const REFACTOR_EVERY: usize = 200;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Column {
    entries: [(usize, f64); 2],
    len: usize,
    artificial: bool,
}

impl Column {
    pub(crate) fn new(entries: &[(usize, f64)]) -> Self {
        let mut col = Column {
            entries: [(0, 0.0); 2],
            len: 0,
            artificial: false,
        };
        for &(r, v) in entries.iter().filter(|e| e.1 != 0.0) {
            col.entries[col.len] = (r, v);
            col.len += 1;
        }
        col
    }

    pub(crate) fn artificial(row: usize) -> Self {
        Column {
            entries: [(row, 1.0), (0, 0.0)],
            len: 1,
            artificial: true,
        }
    }

    fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries[..self.len].iter().copied()
    }
}

pub(crate) struct Simplex {
    m: usize,
    cols: Vec<Column>,
    b: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    allowed: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pub(crate) pivots: usize,
}

impl Simplex {
    /// `basis[r]` is the column basic in row position `r`; it must be nonsingular
    /// and primal feasible.
    pub(crate) fn new(m: usize, cols: Vec<Column>, b: Vec<f64>, basis: Vec<usize>) -> Result<Self> {
        if basis.len() != m || b.len() != m {
            return Err(Error::Numeric(
                "basis or right-hand side has wrong size".into(),
            ));
        }
        let mut is_basic = vec![false; cols.len()];
        for &k in &basis {
            is_basic[k] = true;
        }
        let allowed = cols.iter().map(|c| !c.artificial).collect();
        let mut s = Simplex {
            m,
            cols,
            b,
            basis,
            is_basic,
            allowed,
            binv: vec![0.0; m * m],
            xb: vec![0.0; m],
            pivots: 0,
        };
        s.refactor()?;
        if s.xb.iter().any(|&v| v < -1e-9) {
            return Err(Error::Numeric(
                "initial basis is not primal feasible".into(),
            ));
        }
        Ok(s)
    }

    /// Excludes columns from entering.
    pub(crate) fn forbid(&mut self, mask: &[bool]) {
        for (a, &f) in self.allowed.iter_mut().zip(mask) {
            if f {
                *a = false;
            }
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        // Gauss-Jordan on [B | I] with partial pivoting
        let mut a = vec![0.0; m * m];
        for (pos, &k) in self.basis.iter().enumerate() {
            for (r, v) in self.cols[k].iter() {
                a[r * m + pos] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))
                .expect("nonempty");
            let piv = a[p * m + c];
            if piv.abs() < 1e-12 {
                return Err(Error::Numeric(
                    "singular basis during refactorization".into(),
                ));
            }
            if p != c {
                for j in 0..m {
                    a.swap(p * m + j, c * m + j);
                    inv.swap(p * m + j, c * m + j);
                }
            }
            let scale = 1.0 / piv;
            for j in 0..m {
                a[c * m + j] *= scale;
                inv[c * m + j] *= scale;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c];
                if f == 0.0 {
                    continue;
                }
                for j in 0..m {
                    a[i * m + j] -= f * a[c * m + j];
                    inv[i * m + j] -= f * inv[c * m + j];
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&self.b).map(|(x, y)| x * y).sum();
            self.xb[i] = if v.abs() < 1e-14 { 0.0 } else { v };
        }
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut pi = vec![0.0; m];
        for (i, &k) in self.basis.iter().enumerate() {
            let c = cost[k];
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (p, v) in pi.iter_mut().zip(row) {
                *p += c * v;
            }
        }
        pi
    }

    pub(crate) fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let pi = self.duals(cost);
        self.cols
            .iter()
            .zip(cost)
            .map(|(col, &c)| c - col.iter().map(|(r, v)| pi[r] * v).sum::<f64>())
            .collect()
    }

    /// Maximizes `cost' x` from the current basis.
    pub(crate) fn optimize(&mut self, cost: &[f64], max_pivots: usize) -> Result<()> {
        let m = self.m;
        let mut degenerate_run = 0usize;
        let mut since_refactor = 0usize;
        let mut alpha = vec![0.0; m];
        let mut pi = self.duals(cost);
        loop {
            let bland = degenerate_run >= BLAND_AFTER_PER_ROW * m;
            let mut entering: Option<(usize, f64)> = None;
            for (k, col) in self.cols.iter().enumerate() {
                if self.is_basic[k] || !self.allowed[k] {
                    continue;
                }
                let d = cost[k] - col.iter().map(|(r, v)| pi[r] * v).sum::<f64>();
                if d > PRICE_TOL {
                    if bland {
                        entering = Some((k, d));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| d > best) {
                        entering = Some((k, d));
                    }
                }
            }
            let Some((q, d_q)) = entering else {
                return Ok(());
            };
            if self.pivots >= max_pivots {
                return Err(Error::Numeric(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }

            alpha.iter_mut().for_each(|a| *a = 0.0);
            for (r, v) in self.cols[q].iter() {
                for (i, a) in alpha.iter_mut().enumerate() {
                    *a += self.binv[i * m + r] * v;
                }
            }

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = alpha[i];
                let ratio = if self.cols[self.basis[i]].artificial {
                    if a.abs() > PIVOT_TOL {
                        0.0
                    } else {
                        continue;
                    }
                } else if a > PIVOT_TOL {
                    self.xb[i].max(0.0) / a
                } else {
                    continue;
                };
                let better = match leave {
                    None => true,
                    Some((j, best)) => {
                        if ratio < best - 1e-15 {
                            true
                        } else if ratio <= best + 1e-15 {
                            if bland {
                                self.basis[i] < self.basis[j]
                            } else {
                                a.abs() > alpha[j].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, theta)) = leave else {
                return Err(Error::Numeric(
                    "unbounded direction in a bounded program".into(),
                ));
            };

            for (x, a) in self.xb.iter_mut().zip(&alpha) {
                *x -= theta * a;
            }
            self.xb[r] = theta;
            let piv = alpha[r];
            let (head, tail) = self.binv.split_at_mut(r * m);
            let (prow, rest) = tail.split_at_mut(m);
            prow.iter_mut().for_each(|v| *v /= piv);
            for (i, row) in head.chunks_mut(m).chain(rest.chunks_mut(m)).enumerate() {
                let idx = if i < r { i } else { i + 1 };
                let f = alpha[idx];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(prow.iter()) {
                        *v -= f * p;
                    }
                }
            }
            // the new row r of the inverse prices the entering column at its cost
            for (p, v) in pi.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                *p += d_q * v;
            }
            let old = self.basis[r];
            self.is_basic[old] = false;
            if self.cols[old].artificial {
                self.allowed[old] = false;
            }
            self.basis[r] = q;
            self.is_basic[q] = true;
            self.pivots += 1;

            degenerate_run = if theta <= DEGENERATE_STEP {
                degenerate_run + 1
            } else {
                0
            };
            since_refactor += 1;
            if since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
                pi = self.duals(cost);
                since_refactor = 0;
            }
        }
    }

    /// Primal values of all columns, small negatives clamped to zero.
    pub(crate) fn solution(&mut self) -> Result<Vec<f64>> {
        self.refactor()?;
        let mut x = vec![0.0; self.cols.len()];
        for (i, &k) in self.basis.iter().enumerate() {
            x[k] = self.xb[i].max(0.0);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_transport_program() {
        // max 2 x0 + 3 x1 + x2 s.t. x0 + x1 + x2 = 1, x1 - x2 = 0 (row 1 starts artificial)
        let cols = vec![
            Column::new(&[(0, 1.0)]),
            Column::new(&[(0, 1.0), (1, 1.0)]),
            Column::new(&[(0, 1.0), (1, -1.0)]),
            Column::artificial(1),
        ];
        let mut s = Simplex::new(2, cols, vec![1.0, 0.0], vec![0, 3]).unwrap();
        s.optimize(&[2.0, 3.0, 1.0, 0.0], 100).unwrap();
        let x = s.solution().unwrap();
        // x1 = x2 = 1/2 gives 2, x0 = 1 gives 2: tie, value must be 2
        let v = 2.0 * x[0] + 3.0 * x[1] + x[2];
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(x[3], 0.0);
        assert!((x[1] - x[2]).abs() < 1e-12);
    }

    #[test]
    fn pivot_cap_is_reported() {
        let cols = vec![Column::new(&[(0, 1.0)]), Column::new(&[(0, 1.0)])];
        let mut s = Simplex::new(1, cols, vec![1.0], vec![0]).unwrap();
        assert!(matches!(s.optimize(&[0.0, 1.0], 0), Err(Error::Numeric(_))));
    }
}
