use crate::error::{Error, Result};

/// Dense LU factorization with partial pivoting, row-major storage.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    min_pivot: f64,
}

impl DenseLu {
    /// Factors the `n x n` row-major matrix `a`. Fails if a pivot falls below
    /// `1e-14` times the max-row-sum norm of `a`.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: a.len() });
        }
        let norm = (0..n)
            .map(|r| a[r * n..(r + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (mut p, mut best) = (k, a[k * n + k].abs());
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 1e-14 * norm) {
                return Err(Error::Singular(format!(
                    "pivot {best:.3e} at column {k} below 1e-14 * |C| = {:.3e}",
                    1e-14 * norm
                )));
            }
            min_pivot = min_pivot.min(best);
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..];
            let piv = row_k[k];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] / piv;
                row[k] = l;
                if l != 0.0 {
                    for c in k + 1..n {
                        row[c] -= l * row_k[c];
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, perm, min_pivot })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Smallest pivot magnitude met during factorization.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&k| b[k]).collect();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] = (x[r] - s) / self.lu[r * n + r];
        }
        x
    }
}
