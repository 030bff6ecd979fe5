use super::banded::BandedLu;
use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    /// Sub-diagonal, `sub[k]` couples row `k+1` to column `k`.
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    /// Super-diagonal, `sup[k]` couples row `k` to column `k+1`.
    pub sup: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty tridiagonal system".into()));
        }
        if sub.len() != n - 1 || sup.len() != n - 1 {
            return Err(Error::Dimension {
                expected: n - 1,
                got: if sub.len() != n - 1 { sub.len() } else { sup.len() },
            });
        }
        Ok(TridiagonalSystem { sub, diag, sup })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut s = self.diag[k] * x[k];
                if k > 0 {
                    s += self.sub[k - 1] * x[k - 1];
                }
                if k + 1 < n {
                    s += self.sup[k] * x[k + 1];
                }
                s
            })
            .collect()
    }

    fn block(&self, lo: usize, hi: usize) -> TridiagonalSystem {
        TridiagonalSystem {
            sub: self.sub[lo..hi - 1].to_vec(),
            diag: self.diag[lo..hi].to_vec(),
            sup: self.sup[lo..hi - 1].to_vec(),
        }
    }
}

/// Forward elimination and back substitution.
pub fn thomas_solve(sys: &TridiagonalSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = sys.len();
    if rhs.len() != n {
        return Err(Error::Dimension { expected: n, got: rhs.len() });
    }
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut piv = sys.diag[0];
    if piv == 0.0 {
        return Err(Error::Singular("zero pivot in row 0".into()));
    }
    if n > 1 {
        c[0] = sys.sup[0] / piv;
    }
    x[0] = rhs[0] / piv;
    for k in 1..n {
        piv = sys.diag[k] - sys.sub[k - 1] * c[k - 1];
        if piv == 0.0 {
            return Err(Error::Singular(format!("zero pivot in row {k}")));
        }
        if k + 1 < n {
            c[k] = sys.sup[k] / piv;
        }
        x[k] = (rhs[k] - sys.sub[k - 1] * x[k - 1]) / piv;
    }
    for k in (0..n - 1).rev() {
        x[k] -= c[k] * x[k + 1];
    }
    Ok(x)
}

/// Divide-and-conquer solve with `n_blocks` independent block solves.
///
/// Each block `k` is solved for the right-hand side and for the two spikes
/// created by its coupling to the neighbouring blocks. The interface values
/// `(last of block 1, first of block 2, last of block 2, ..., first of block p)`
/// then satisfy a banded system of size `2 p - 2`, after which every block is
/// corrected independently.
pub fn dac_solve(sys: &TridiagonalSystem, rhs: &[f64], n_blocks: usize) -> Result<Vec<f64>> {
    let n = sys.len();
    if rhs.len() != n {
        return Err(Error::Dimension { expected: n, got: rhs.len() });
    }
    if n_blocks == 0 {
        return Err(Error::InvalidArgument("n_blocks must be at least 1".into()));
    }
    if n_blocks == 1 {
        return thomas_solve(sys, rhs);
    }
    if n < 2 * n_blocks {
        return Err(Error::InvalidArgument(format!(
            "{n_blocks} blocks of size >= 2 do not fit in {n} rows"
        )));
    }
    let p = n_blocks;
    let bounds: Vec<usize> = (0..=p).map(|k| k * n / p).collect();

    struct Part {
        y: Vec<f64>,
        // response to the coupling with the previous block's last unknown
        left: Option<Vec<f64>>,
        // response to the coupling with the next block's first unknown
        right: Option<Vec<f64>>,
    }

    let solve_block = |k: usize| -> Result<Part> {
        let (lo, hi) = (bounds[k], bounds[k + 1]);
        let blk = sys.block(lo, hi);
        let m = hi - lo;
        let y = thomas_solve(&blk, &rhs[lo..hi])?;
        let left = if k > 0 {
            let mut e = vec![0.0; m];
            e[0] = sys.sub[lo - 1];
            Some(thomas_solve(&blk, &e)?)
        } else {
            None
        };
        let right = if k + 1 < p {
            let mut e = vec![0.0; m];
            e[m - 1] = sys.sup[hi - 1];
            Some(thomas_solve(&blk, &e)?)
        } else {
            None
        };
        Ok(Part { y, left, right })
    };
    use rayon::prelude::*;
    let parts: Vec<Part> = (0..p).into_par_iter().map(solve_block).collect::<Result<_>>()?;

    // unknown ordering: z[2k] = last of block k, z[2k+1] = first of block k+1
    let nr = 2 * p - 2;
    let mut red = BandedLu::new(nr, 2, 2);
    let mut b = vec![0.0; nr];
    for k in 0..p {
        let part = &parts[k];
        let m = part.y.len();
        // first row of block k (k >= 1): unknown z[2k-1]
        if k > 0 {
            let r = 2 * k - 1;
            red.set(r, r, 1.0);
            red.add(r, 2 * k - 2, part.left.as_ref().unwrap()[0]);
            if let Some(right) = &part.right {
                red.add(r, 2 * k + 1, right[0]);
            }
            b[r] = part.y[0];
        }
        // last row of block k (k < p-1): unknown z[2k]
        if k + 1 < p {
            let r = 2 * k;
            red.set(r, r, 1.0);
            if let Some(left) = &part.left {
                red.add(r, 2 * k - 2, left[m - 1]);
            }
            red.add(r, 2 * k + 1, part.right.as_ref().unwrap()[m - 1]);
            b[r] = part.y[m - 1];
        }
    }
    red.factor()?;
    let z = red.solve(&b)?;

    let mut x = vec![0.0; n];
    for (k, part) in parts.iter().enumerate() {
        let lo = bounds[k];
        for (q, &yq) in part.y.iter().enumerate() {
            let mut v = yq;
            if let Some(left) = &part.left {
                v -= left[q] * z[2 * k - 2];
            }
            if let Some(right) = &part.right {
                v -= right[q] * z[2 * k + 1];
            }
            x[lo + q] = v;
        }
    }
    Ok(x)
}
