//! Capacitance-matrix solver: the obstructed operator `A` is treated as a
//! low-rank row modification of the unobstructed operator `G`.
//!
//! With `Q` selecting the `n_c` marker rows and `M = Q^T (A - G)`:
//!
//! 1. `W = G^-1 Z`
//! 2. `(I + M G^-1 Q) Y = M W`
//! 3. `X = G^-1 (Z - Q Y)`
//!
//! Identity (solid) rows of `A` are solved as rows of `G` and overwritten
//! afterwards, which keeps `n_c` proportional to the number of cut cells.
//! Operators with a constant nullspace are handled through the rank-one
//! regularization `G + 1 v^T`, `A + 1 v^T`, which leaves `A - G` unchanged.

use super::dense::DenseLu;
use super::fast::FastPlan;
use crate::discretization::SparseOperator;
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug)]
pub struct CapacitanceSolver {
    plan: Arc<FastPlan>,
    n: usize,
    markers: Vec<usize>,
    /// Rows of `A - G` at the markers.
    m_ptr: Vec<usize>,
    m_cols: Vec<usize>,
    m_vals: Vec<f64>,
    lu: Option<DenseLu>,
    solid_rows: Vec<usize>,
    /// `v` of the rank-one regularization, for singular operators.
    reg: Option<Vec<f64>>,
    nullspace: Option<crate::discretization::Nullspace>,
}

impl CapacitanceSolver {
    /// Factorizes the capacitance matrix of `a` against the operator of `plan`.
    pub fn build(a: &SparseOperator, plan: Arc<FastPlan>) -> Result<Self> {
        let n = a.dim();
        if plan.len() != n {
            return Err(Error::Dimension { expected: plan.len(), got: n });
        }
        let sep = plan.operator();
        let markers = a.markers().to_vec();
        let mut m_ptr = vec![0];
        let mut m_cols = Vec::new();
        let mut m_vals = Vec::new();
        for &r in &markers {
            let g = sep.row(r);
            let (cols, vals) = a.row(r);
            let mut merged: Vec<(usize, f64)> = cols.iter().copied().zip(vals.iter().copied()).collect();
            for (c, v) in g {
                merged.push((c, -v));
            }
            merged.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < merged.len() {
                let c = merged[k].0;
                let mut v = 0.0;
                while k < merged.len() && merged[k].0 == c {
                    v += merged[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    m_cols.push(c);
                    m_vals.push(v);
                }
            }
            m_ptr.push(m_cols.len());
        }

        let reg = if plan.is_singular() {
            let w = sep.null_weights.as_ref().unwrap();
            let nm = sep.nmodes;
            let total: f64 = w.iter().sum::<f64>() * nm as f64;
            Some((0..n).map(|k| w[k / nm] / total).collect())
        } else {
            None
        };

        let mut solver = CapacitanceSolver {
            plan,
            n,
            markers,
            m_ptr,
            m_cols,
            m_vals,
            lu: None,
            solid_rows: a.solid_rows().to_vec(),
            reg,
            nullspace: a.nullspace().cloned(),
        };
        let nc = solver.markers.len();
        if nc > 0 {
            let columns: Vec<Vec<f64>> = (0..nc)
                .into_par_iter()
                .map(|k| {
                    let mut e = vec![0.0; n];
                    e[solver.markers[k]] = 1.0;
                    let w = solver.g_inv(e)?;
                    Ok(solver.apply_m(&w))
                })
                .collect::<Result<_>>()?;
            let mut c = vec![0.0; nc * nc];
            for (k, col) in columns.iter().enumerate() {
                for r in 0..nc {
                    c[r * nc + k] = col[r];
                }
                c[k * nc + k] += 1.0;
            }
            solver.lu = Some(DenseLu::factor(nc, c)?);
        }
        Ok(solver)
    }

    /// Number of modified rows.
    pub fn n_c(&self) -> usize {
        self.markers.len()
    }

    pub fn markers(&self) -> &[usize] {
        &self.markers
    }

    pub fn plan(&self) -> &Arc<FastPlan> {
        &self.plan
    }

    /// Capacitance matrix `I + M G^-1 Q`, recomputed (for inspection and tests).
    pub fn capacitance_matrix(&self) -> Result<Vec<f64>> {
        let nc = self.n_c();
        let mut c = vec![0.0; nc * nc];
        for k in 0..nc {
            let mut e = vec![0.0; self.n];
            e[self.markers[k]] = 1.0;
            let col = self.apply_m(&self.g_inv(e)?);
            for r in 0..nc {
                c[r * nc + k] = col[r] + if r == k { 1.0 } else { 0.0 };
            }
        }
        Ok(c)
    }

    fn apply_m(&self, w: &[f64]) -> Vec<f64> {
        (0..self.markers.len())
            .map(|r| {
                let (a, b) = (self.m_ptr[r], self.m_ptr[r + 1]);
                self.m_cols[a..b].iter().zip(&self.m_vals[a..b]).map(|(&c, &v)| v * w[c]).sum()
            })
            .collect()
    }

    /// Inverse of the (regularized) unobstructed operator.
    fn g_inv(&self, mut z: Vec<f64>) -> Result<Vec<f64>> {
        match &self.reg {
            None => {
                self.plan.solve_in_place(&mut z)?;
                Ok(z)
            }
            Some(v) => {
                let s: f64 = v.iter().zip(&z).map(|(a, b)| a * b).sum();
                z.iter_mut().for_each(|x| *x -= s);
                self.plan.solve_in_place(&mut z)?;
                z.iter_mut().for_each(|x| *x += s);
                Ok(z)
            }
        }
    }

    /// Solves `A x = z`; for singular `A` the right-hand side is projected
    /// onto the range and the solution has zero weighted mean.
    pub fn solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: z.len() });
        }
        let mut z = z.to_vec();
        if let Some(ns) = &self.nullspace {
            ns.remove_mean(&mut z);
        }
        let mut x = match &self.lu {
            None => self.g_inv(z.clone())?,
            Some(lu) => {
                let w = self.g_inv(z.clone())?;
                let y = lu.solve(&self.apply_m(&w));
                let mut r = z.clone();
                for (k, &m) in self.markers.iter().enumerate() {
                    r[m] -= y[k];
                }
                self.g_inv(r)?
            }
        };
        for &s in &self.solid_rows {
            x[s] = z[s];
        }
        if let Some(ns) = &self.nullspace {
            ns.remove_mean(&mut x);
        }
        Ok(x)
    }
}
