//! Fast solver for separable operators: real trigonometric transforms along
//! `y`, one tridiagonal solve per mode along `x`.

use super::tridiag::{dac_solve, TridiagonalSystem};
use crate::error::{Error, Result};
use rayon::prelude::*;
use rustdct::{Dst1, DctPlanner, TransformType2And3};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// Transform diagonalizing the second difference along `y`, chosen by the
/// boundary treatment at the two ends of each column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YTransform {
    /// Mirror ghost `x[-1] = x[0]`: homogeneous Neumann at the half-cell wall.
    Dct2,
    /// Antisymmetric ghost `x[-1] = -x[0]`: homogeneous Dirichlet at the half-cell wall.
    Dst2,
    /// `x[-1] = x[n] = 0`: homogeneous Dirichlet one node beyond each end.
    Dst1,
}

impl YTransform {
    /// Eigenvalue of the unscaled second difference for mode `m` of `n`.
    pub fn eigenvalue(self, m: usize, n: usize) -> f64 {
        let th = match self {
            YTransform::Dct2 => PI * m as f64 / n as f64,
            YTransform::Dst2 => PI * (m + 1) as f64 / n as f64,
            YTransform::Dst1 => PI * (m + 1) as f64 / (n + 1) as f64,
        };
        2.0 * th.cos() - 2.0
    }

    /// Value of the ghost beyond the low end given the first node, and
    /// beyond the high end given the last node.
    pub fn ghost(self, edge: f64) -> f64 {
        match self {
            YTransform::Dct2 => edge,
            YTransform::Dst2 => -edge,
            YTransform::Dst1 => 0.0,
        }
    }
}

/// Tridiagonal kernel used for the per-mode `x` solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TridiagKernel {
    /// Prefactored Thomas sweeps, vectorized across modes.
    Thomas,
    /// Divide and conquer with the given number of blocks, mode by mode.
    Dac { blocks: usize },
}

/// Description of a separable operator on an `ncols x nmodes` array stored
/// column-major along `y` (`x[i * nmodes + j]`):
///
/// `(G x)[i, j] = sub[i] x[i-1, j] + diag[i] x[i, j] + sup[i] x[i+1, j] + y_coef * (x[i, j-1] - 2 x[i, j] + x[i, j+1])`
///
/// with `y` ghosts given by `transform`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub y_coef: f64,
    pub nmodes: usize,
    pub transform: YTransform,
    /// For operators with a constant nullspace: left-null weights along `x`.
    pub null_weights: Option<Vec<f64>>,
}

impl SeparableOperator {
    pub fn ncols(&self) -> usize {
        self.diag.len()
    }

    pub fn len(&self) -> usize {
        self.ncols() * self.nmodes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries of row `k`, matching [`SeparableOperator::apply`].
    pub fn row(&self, k: usize) -> Vec<(usize, f64)> {
        let op = self;
        let (nc, nm) = (op.ncols(), op.nmodes);
        let (i, j) = (k / nm, k % nm);
        let mut diag = op.diag[i] - 2.0 * op.y_coef;
        let mut out = Vec::with_capacity(5);
        if i > 0 {
            out.push((k - nm, op.sub[i]));
        }
        if j > 0 {
            out.push((k - 1, op.y_coef));
        } else if op.transform == YTransform::Dct2 {
            diag += op.y_coef;
        } else if op.transform == YTransform::Dst2 {
            diag -= op.y_coef;
        }
        if j + 1 < nm {
            out.push((k + 1, op.y_coef));
        } else if op.transform == YTransform::Dct2 {
            diag += op.y_coef;
        } else if op.transform == YTransform::Dst2 {
            diag -= op.y_coef;
        }
        out.push((k, diag));
        if i + 1 < nc {
            out.push((k + nm, op.sup[i]));
        }
        out.sort_by_key(|e| e.0);
        out
    }

    /// Matrix-free application.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (nc, nm) = (self.ncols(), self.nmodes);
        let mut out = vec![0.0; nc * nm];
        for i in 0..nc {
            for j in 0..nm {
                let k = i * nm + j;
                let mut s = self.diag[i] * x[k];
                if i > 0 {
                    s += self.sub[i] * x[k - nm];
                }
                if i + 1 < nc {
                    s += self.sup[i] * x[k + nm];
                }
                let lo = if j > 0 { x[k - 1] } else { self.transform.ghost(x[k]) };
                let hi = if j + 1 < nm { x[k + 1] } else { self.transform.ghost(x[k]) };
                s += self.y_coef * (lo - 2.0 * x[k] + hi);
                out[k] = s;
            }
        }
        out
    }
}

enum Plans {
    Type23 {
        fwd: Arc<dyn TransformType2And3<f64>>,
        scratch: usize,
    },
    Type1 {
        fwd: Arc<dyn Dst1<f64>>,
        scratch: usize,
    },
}

/// Prefactored fast inverse of a [`SeparableOperator`].
pub struct FastPlan {
    op: SeparableOperator,
    plans: Plans,
    scale: f64,
    /// Per-(column, mode) Thomas factors.
    inv_piv: Vec<f64>,
    cprime: Vec<f64>,
    kernel: TridiagKernel,
    solves: AtomicUsize,
}

impl std::fmt::Debug for FastPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FastPlan")
            .field("ncols", &self.op.ncols())
            .field("nmodes", &self.op.nmodes)
            .field("transform", &self.op.transform)
            .field("kernel", &self.kernel)
            .finish()
    }
}

impl FastPlan {
    pub fn new(op: SeparableOperator) -> Result<Self> {
        Self::with_kernel(op, TridiagKernel::Thomas)
    }

    pub fn with_kernel(op: SeparableOperator, kernel: TridiagKernel) -> Result<Self> {
        let (nc, nm) = (op.ncols(), op.nmodes);
        if nc == 0 || nm == 0 || op.sub.len() != nc || op.sup.len() != nc {
            return Err(Error::InvalidArgument("malformed separable operator".into()));
        }
        let mut planner = DctPlanner::new();
        let (plans, scale) = match op.transform {
            YTransform::Dct2 => {
                let fwd = planner.plan_dct2(nm);
                let scratch = fwd.get_scratch_len();
                (Plans::Type23 { fwd, scratch }, 2.0 / nm as f64)
            }
            YTransform::Dst2 => {
                let fwd = planner.plan_dst2(nm);
                let scratch = fwd.get_scratch_len();
                (Plans::Type23 { fwd, scratch }, 2.0 / nm as f64)
            }
            YTransform::Dst1 => {
                let fwd = planner.plan_dst1(nm);
                let scratch = fwd.get_scratch_len();
                (Plans::Type1 { fwd, scratch }, 2.0 / (nm + 1) as f64)
            }
        };
        let mut inv_piv = vec![0.0; nc * nm];
        let mut cprime = vec![0.0; nc * nm];
        for m in 0..nm {
            let lam = op.y_coef * op.transform.eigenvalue(m, nm);
            let pinned = op.null_weights.is_some() && m == 0 && op.transform == YTransform::Dct2;
            let mut prev_c = 0.0;
            for i in 0..nc {
                let (d, up, lo) = if pinned && i == 0 {
                    (1.0, 0.0, 0.0)
                } else {
                    (op.diag[i] + lam, op.sup[i], if i > 0 { op.sub[i] } else { 0.0 })
                };
                let piv = d - lo * prev_c;
                if piv == 0.0 || !piv.is_finite() {
                    return Err(Error::Singular(format!("fast plan: zero pivot (mode {m}, column {i})")));
                }
                let ip = 1.0 / piv;
                inv_piv[i * nm + m] = ip;
                let c = if i + 1 < nc { up * ip } else { 0.0 };
                cprime[i * nm + m] = c;
                prev_c = c;
            }
        }
        Ok(FastPlan {
            op,
            plans,
            scale,
            inv_piv,
            cprime,
            kernel,
            solves: AtomicUsize::new(0),
        })
    }

    pub fn operator(&self) -> &SeparableOperator {
        &self.op
    }

    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        self.op.is_empty()
    }

    pub fn is_singular(&self) -> bool {
        self.op.null_weights.is_some()
    }

    /// Number of [`FastPlan::solve`] calls so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn forward(&self, x: &mut [f64]) {
        let nm = self.op.nmodes;
        match &self.plans {
            Plans::Type23 { fwd, scratch } => {
                let dct = self.op.transform == YTransform::Dct2;
                x.par_chunks_mut(nm).for_each_init(
                    || vec![0.0; *scratch],
                    |s, col| {
                        if dct {
                            fwd.process_dct2_with_scratch(col, s)
                        } else {
                            fwd.process_dst2_with_scratch(col, s)
                        }
                    },
                );
            }
            Plans::Type1 { fwd, scratch } => {
                x.par_chunks_mut(nm)
                    .for_each_init(|| vec![0.0; *scratch], |s, col| fwd.process_dst1_with_scratch(col, s));
            }
        }
    }

    fn inverse(&self, x: &mut [f64]) {
        let nm = self.op.nmodes;
        let scale = self.scale;
        match &self.plans {
            Plans::Type23 { fwd, scratch } => {
                let dct = self.op.transform == YTransform::Dct2;
                x.par_chunks_mut(nm).for_each_init(
                    || vec![0.0; *scratch],
                    |s, col| {
                        if dct {
                            fwd.process_dct3_with_scratch(col, s)
                        } else {
                            fwd.process_dst3_with_scratch(col, s)
                        }
                        col.iter_mut().for_each(|v| *v *= scale);
                    },
                );
            }
            Plans::Type1 { fwd, scratch } => {
                x.par_chunks_mut(nm).for_each_init(
                    || vec![0.0; *scratch],
                    |s, col| {
                        fwd.process_dst1_with_scratch(col, s);
                        col.iter_mut().for_each(|v| *v *= scale);
                    },
                );
            }
        }
    }

    fn sweep_thomas(&self, x: &mut [f64]) {
        let (nc, nm) = (self.op.ncols(), self.op.nmodes);
        let sub = &self.op.sub;
        for m in 0..nm {
            x[m] *= self.inv_piv[m];
        }
        for i in 1..nc {
            let (prev, cur) = x.split_at_mut(i * nm);
            let prev = &prev[(i - 1) * nm..];
            let cur = &mut cur[..nm];
            let ip = &self.inv_piv[i * nm..(i + 1) * nm];
            let a = sub[i];
            for m in 0..nm {
                cur[m] = (cur[m] - a * prev[m]) * ip[m];
            }
        }
        for i in (0..nc - 1).rev() {
            let (cur, next) = x.split_at_mut((i + 1) * nm);
            let cur = &mut cur[i * nm..];
            let next = &next[..nm];
            let cp = &self.cprime[i * nm..(i + 1) * nm];
            for m in 0..nm {
                cur[m] -= cp[m] * next[m];
            }
        }
    }

    fn sweep_dac(&self, x: &mut [f64], blocks: usize) -> Result<()> {
        let (nc, nm) = (self.op.ncols(), self.op.nmodes);
        for m in 0..nm {
            let lam = self.op.y_coef * self.op.transform.eigenvalue(m, nm);
            let mut diag: Vec<f64> = self.op.diag.iter().map(|d| d + lam).collect();
            let sub = self.op.sub[1..].to_vec();
            let mut sup = self.op.sup[..nc - 1].to_vec();
            let mut rhs: Vec<f64> = (0..nc).map(|i| x[i * nm + m]).collect();
            if self.is_singular() && m == 0 && self.op.transform == YTransform::Dct2 {
                diag[0] = 1.0;
                sup[0] = 0.0;
                rhs[0] = 0.0;
            }
            let sys = TridiagonalSystem::new(sub, diag, sup)?;
            let sol = dac_solve(&sys, &rhs, blocks.min(nc / 2).max(1))?;
            for i in 0..nc {
                x[i * nm + m] = sol[i];
            }
        }
        Ok(())
    }

    /// Solves `G x = rhs`. For singular operators the right-hand side is
    /// first projected onto the range of `G` and the returned solution has
    /// zero weighted mean.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: x.len() });
        }
        self.solves.fetch_add(1, Ordering::Relaxed);
        let (nc, nm) = (self.op.ncols(), self.op.nmodes);
        self.forward(x);
        let pinned = self.is_singular() && self.op.transform == YTransform::Dct2;
        if pinned {
            let w = self.op.null_weights.as_ref().unwrap();
            let wsum: f64 = w.iter().sum();
            let mean = (0..nc).map(|i| w[i] * x[i * nm]).sum::<f64>() / wsum;
            for i in 0..nc {
                x[i * nm] -= mean;
            }
            x[0] = 0.0;
        }
        match self.kernel {
            TridiagKernel::Thomas => self.sweep_thomas(x),
            TridiagKernel::Dac { blocks } => self.sweep_dac(x, blocks)?,
        }
        if pinned {
            let w = self.op.null_weights.as_ref().unwrap();
            let wsum: f64 = w.iter().sum();
            let mean = (0..nc).map(|i| w[i] * x[i * nm]).sum::<f64>() / wsum;
            for i in 0..nc {
                x[i * nm] -= mean;
            }
        }
        self.inverse(x);
        Ok(())
    }

    /// Solves several independent right-hand sides concurrently.
    pub fn solve_batch(&self, rhs: &mut [Vec<f64>]) -> Result<()> {
        rhs.par_iter_mut().try_for_each(|r| self.solve_in_place(r))
    }
}
