use crate::error::{Error, Result};

/// Banded LU factorization with partial pivoting.
///
/// Entries are stored row by row in a window of width `2 kl + ku + 1`,
/// leaving room for the fill created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    perm: Vec<usize>,
    factored: bool,
}

impl BandedLu {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            perm: (0..n).collect(),
            factored: false,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let off = c as isize - r as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width {
            None
        } else {
            Some(r * self.width + off as usize)
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.slot(r, c).map_or(0.0, |k| self.data[k])
    }

    /// Sets an entry; panics outside the declared band.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(c + self.kl >= r && c <= r + self.ku, "entry ({r},{c}) outside band");
        let k = self.slot(r, c).unwrap();
        self.data[k] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(c + self.kl >= r && c <= r + self.ku, "entry ({r},{c}) outside band");
        let k = self.slot(r, c).unwrap();
        self.data[k] += v;
    }

    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..n {
            let last_row = (r + self.kl).min(n - 1);
            let last_col = (r + self.kl + self.ku).min(n - 1);
            let mut p = r;
            let mut best = self.get(r, r).abs();
            for q in r + 1..=last_row {
                let v = self.get(q, r).abs();
                if v > best {
                    best = v;
                    p = q;
                }
            }
            if !(best > 1e-300) || best <= f64::EPSILON * 1e-3 * scale {
                return Err(Error::Singular(format!("banded LU: zero pivot at row {r}")));
            }
            if p != r {
                for c in r..=last_col {
                    let a = self.get(r, c);
                    let b = self.get(p, c);
                    let ka = self.slot(r, c).unwrap();
                    let kb = self.slot(p, c).unwrap();
                    self.data[ka] = b;
                    self.data[kb] = a;
                }
                self.perm.swap(r, p);
            }
            let piv = self.get(r, r);
            for q in r + 1..=last_row {
                let kq = self.slot(q, r).unwrap();
                let l = self.data[kq] / piv;
                if l == 0.0 {
                    continue;
                }
                self.data[kq] = l;
                for c in r + 1..=last_col {
                    let u = self.get(r, c);
                    if u != 0.0 {
                        let k = self.slot(q, c).unwrap();
                        self.data[k] -= l * u;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if !self.factored {
            return Err(Error::InvalidArgument("banded LU used before factor()".into()));
        }
        if b.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: b.len() });
        }
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&k| b[k]).collect();
        for r in 0..n {
            let xr = x[r];
            for q in r + 1..=(r + self.kl).min(n.saturating_sub(1)) {
                x[q] -= self.get(q, r) * xr;
            }
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..=(r + self.kl + self.ku).min(n - 1) {
                s -= self.get(r, c) * x[c];
            }
            x[r] = s / self.get(r, r);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_with_pivoting() {
        // needs a row swap at the first step
        let mut a = BandedLu::new(3, 1, 1);
        let m = [[0.0, 2.0, 0.0], [1.0, 1.0, 3.0], [0.0, 4.0, 1.0]];
        for r in 0..3 {
            for c in 0..3 {
                if m[r][c] != 0.0 {
                    a.set(r, c, m[r][c]);
                }
            }
        }
        a.factor().unwrap();
        let x = a.solve(&[2.0, 5.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = BandedLu::new(2, 1, 1);
        a.set(0, 0, 1.0);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        assert!(a.factor().is_err());
    }
}
