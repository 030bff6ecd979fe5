//! Preconditioned BiCGSTAB.

use crate::discretization::SparseOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    Jacobi,
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovSettings {
    /// Relative residual target `|A x - b| <= tol |b|`.
    pub tol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        KrylovSettings {
            tol: 1e-10,
            max_iter: 5000,
            preconditioner: Preconditioner::Ilu0,
        }
    }
}

impl KrylovSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid_value("solver.krylov_tol", "must lie in (0, 1)"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid_value("solver.krylov_max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

enum Precond {
    Jacobi(Vec<f64>),
    Ilu {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
        diag_pos: Vec<usize>,
    },
}

impl Precond {
    fn build(a: &SparseOperator, kind: Preconditioner) -> Result<Self> {
        let n = a.dim();
        match kind {
            Preconditioner::Jacobi => {
                let d = a.diagonal();
                if let Some(r) = d.iter().position(|&v| v == 0.0) {
                    return Err(Error::Singular(format!("zero diagonal in row {r}")));
                }
                Ok(Precond::Jacobi(d.iter().map(|v| 1.0 / v).collect()))
            }
            Preconditioner::Ilu0 => {
                let mut row_ptr = vec![0];
                let mut cols = Vec::with_capacity(a.nnz());
                let mut vals = Vec::with_capacity(a.nnz());
                for r in 0..n {
                    let (c, v) = a.row(r);
                    cols.extend_from_slice(c);
                    vals.extend_from_slice(v);
                    row_ptr.push(cols.len());
                }
                let mut diag_pos = vec![usize::MAX; n];
                for r in 0..n {
                    for k in row_ptr[r]..row_ptr[r + 1] {
                        if cols[k] == r {
                            diag_pos[r] = k;
                        }
                    }
                    if diag_pos[r] == usize::MAX {
                        return Err(Error::Singular(format!("ILU(0): missing diagonal in row {r}")));
                    }
                }
                let mut pos = vec![usize::MAX; n];
                for r in 0..n {
                    let (s, e) = (row_ptr[r], row_ptr[r + 1]);
                    for k in s..e {
                        pos[cols[k]] = k;
                    }
                    for k in s..e {
                        let c = cols[k];
                        if c >= r {
                            break;
                        }
                        let l = vals[k] / vals[diag_pos[c]];
                        vals[k] = l;
                        for q in diag_pos[c] + 1..row_ptr[c + 1] {
                            let p = pos[cols[q]];
                            if p != usize::MAX {
                                vals[p] -= l * vals[q];
                            }
                        }
                    }
                    if vals[diag_pos[r]] == 0.0 {
                        return Err(Error::Singular(format!("ILU(0): zero pivot in row {r}")));
                    }
                    for k in s..e {
                        pos[cols[k]] = usize::MAX;
                    }
                }
                Ok(Precond::Ilu {
                    row_ptr,
                    cols,
                    vals,
                    diag_pos,
                })
            }
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Jacobi(d) => {
                for k in 0..r.len() {
                    z[k] = d[k] * r[k];
                }
            }
            Precond::Ilu {
                row_ptr,
                cols,
                vals,
                diag_pos,
            } => {
                let n = r.len();
                for i in 0..n {
                    let mut s = r[i];
                    for k in row_ptr[i]..diag_pos[i] {
                        s -= vals[k] * z[cols[k]];
                    }
                    z[i] = s;
                }
                for i in (0..n).rev() {
                    let mut s = z[i];
                    for k in diag_pos[i] + 1..row_ptr[i + 1] {
                        s -= vals[k] * z[cols[k]];
                    }
                    z[i] = s / vals[diag_pos[i]];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = rhs` from the initial guess `x0`; returns the solution and
/// the iteration count. Operators with a nullspace get a projected
/// right-hand side, one pinned row, and a zero-mean solution.
pub fn krylov_solve(a: &SparseOperator, rhs: &[f64], settings: &KrylovSettings, x0: &[f64]) -> Result<(Vec<f64>, usize)> {
    settings.validate()?;
    let n = a.dim();
    if rhs.len() != n || x0.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if rhs.len() != n { rhs.len() } else { x0.len() },
        });
    }
    match a.nullspace() {
        None => bicgstab(a, rhs, settings, x0),
        Some(ns) => {
            let mut b = rhs.to_vec();
            ns.remove_mean(&mut b);
            // pin the last row in the support
            let pin = (0..n).rev().find(|&k| ns.weights[k] > 0.0).unwrap_or(0);
            let pinned = a.with_identity_row(pin);
            let mut x0 = x0.to_vec();
            ns.remove_mean(&mut x0);
            let shift = x0[pin];
            x0.iter_mut().zip(&ns.weights).for_each(|(v, w)| {
                if *w > 0.0 {
                    *v -= shift
                }
            });
            b[pin] = 0.0;
            let (mut x, it) = bicgstab(&pinned, &b, settings, &x0)?;
            ns.remove_mean(&mut x);
            Ok((x, it))
        }
    }
}

fn bicgstab(a: &SparseOperator, b: &[f64], settings: &KrylovSettings, x0: &[f64]) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let pc = Precond::build(a, settings.preconditioner)?;
    let bnorm = norm(b);
    let mut x = x0.to_vec();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let target = settings.tol * bnorm;
    let mut r = b.to_vec();
    let ax = a.apply(&x);
    r.iter_mut().zip(&ax).for_each(|(ri, ai)| *ri -= ai);
    let mut best = norm(&r);
    let mut best_x = x.clone();
    if best <= target {
        return Ok((x, 0));
    }
    let mut rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut it = 0;
    while it < settings.max_iter {
        it += 1;
        let rho_new = dot(&rhat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            // breakdown: restart from the current iterate
            a.apply_into(&x, &mut t);
            for k in 0..n {
                r[k] = b[k] - t[k];
            }
            rhat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        pc.apply(&p, &mut phat);
        a.apply_into(&phat, &mut v);
        let den = dot(&rhat, &v);
        if den == 0.0 {
            break;
        }
        alpha = rho / den;
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if norm(&s) <= target {
            for k in 0..n {
                x[k] += alpha * phat[k];
            }
            if let Some(done) = check(a, b, &x, target, &mut best, &mut best_x) {
                return Ok((done, it));
            }
            a.apply_into(&x, &mut t);
            for k in 0..n {
                r[k] = b[k] - t[k];
            }
            continue;
        }
        pc.apply(&s, &mut shat);
        a.apply_into(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for k in 0..n {
            x[k] += alpha * phat[k] + omega * shat[k];
            r[k] = s[k] - omega * t[k];
        }
        let rn = norm(&r);
        if rn <= target {
            if let Some(done) = check(a, b, &x, target, &mut best, &mut best_x) {
                return Ok((done, it));
            }
            a.apply_into(&x, &mut t);
            for k in 0..n {
                r[k] = b[k] - t[k];
            }
        } else if rn < best {
            best = rn;
            best_x.copy_from_slice(&x);
        }
    }
    Err(Error::NotConverged {
        iterations: it,
        residual: best / bnorm,
    })
}

/// Confirms convergence on the true residual.
fn check(a: &SparseOperator, b: &[f64], x: &[f64], target: f64, best: &mut f64, best_x: &mut [f64]) -> Option<Vec<f64>> {
    let ax = a.apply(x);
    let rn = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    if rn < *best {
        *best = rn;
        best_x.copy_from_slice(x);
    }
    (rn <= target).then(|| x.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 1e-3));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        SparseOperator::from_triplets(n, &t).unwrap()
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = SparseOperator::identity(10);
        let b: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let s = KrylovSettings {
            preconditioner: Preconditioner::Jacobi,
            ..Default::default()
        };
        let (x, it) = krylov_solve(&a, &b, &s, &[0.0; 10]).unwrap();
        assert_eq!(x, b);
        assert!(it <= 1);
    }

    #[test]
    fn both_preconditioners_converge() {
        let a = laplace_1d(200);
        let b: Vec<f64> = (0..200).map(|k| ((k * 7) % 13) as f64 - 6.0).collect();
        for pc in [Preconditioner::Jacobi, Preconditioner::Ilu0] {
            let s = KrylovSettings {
                tol: 1e-10,
                max_iter: 2000,
                preconditioner: pc,
            };
            let (x, _) = krylov_solve(&a, &b, &s, &vec![0.0; 200]).unwrap();
            let r = a.apply(&x);
            let res = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            assert!(res <= 1e-10 * norm(&b));
        }
    }

    #[test]
    fn forced_failure_reports_residual() {
        let a = laplace_1d(400);
        let b = vec![1.0; 400];
        let s = KrylovSettings {
            tol: 1e-30,
            max_iter: 2,
            preconditioner: Preconditioner::Jacobi,
        };
        match krylov_solve(&a, &b, &s, &vec![0.0; 400]) {
            Err(Error::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0 && residual.is_finite());
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
