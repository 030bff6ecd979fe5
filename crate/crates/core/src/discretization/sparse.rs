use crate::error::{Error, Result};

/// Where the value of a Dirichlet term comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySource {
    /// Body boundary point.
    Body { point: [f64; 2] },
    /// Outer boundary data, indexed along the boundary.
    West(usize),
    East(usize),
    South(usize),
    North(usize),
}

/// Known boundary value moved to the right-hand side: `rhs[row] += weight * value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletTerm {
    pub row: usize,
    pub weight: f64,
    pub source: BoundarySource,
}

/// Outer boundary values of one field, indexed along each side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryValues {
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
}

impl BoundaryValues {
    pub fn get(&self, s: &BoundarySource) -> f64 {
        let pick = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
        match *s {
            BoundarySource::West(k) => pick(&self.west, k),
            BoundarySource::East(k) => pick(&self.east, k),
            BoundarySource::South(k) => pick(&self.south, k),
            BoundarySource::North(k) => pick(&self.north, k),
            BoundarySource::Body { .. } => 0.0,
        }
    }
}

/// Constant nullspace restricted to the non-solid rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Nullspace {
    /// Left-null vector: `weights^T A = 0`. Zero on solid rows.
    pub weights: Vec<f64>,
}

impl Nullspace {
    /// Weighted mean over the support.
    pub fn mean(&self, x: &[f64]) -> f64 {
        let (mut s, mut w) = (0.0, 0.0);
        for (xi, wi) in x.iter().zip(&self.weights) {
            if *wi > 0.0 {
                s += wi * xi;
                w += wi;
            }
        }
        if w > 0.0 {
            s / w
        } else {
            0.0
        }
    }

    /// Removes the weighted mean on the support.
    pub fn remove_mean(&self, x: &mut [f64]) {
        let m = self.mean(x);
        for (xi, wi) in x.iter_mut().zip(&self.weights) {
            if *wi > 0.0 {
                *xi -= m;
            }
        }
    }
}

/// Square sparse matrix in compressed rows, plus the bookkeeping the
/// solvers need: identity (solid) rows, rows that differ from the
/// unobstructed operator, and Dirichlet terms feeding the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    markers: Vec<usize>,
    solid_rows: Vec<usize>,
    dirichlet: Vec<DirichletTerm>,
    affine: Vec<f64>,
    nullspace: Option<Nullspace>,
}

/// Row-by-row assembly of a [`SparseOperator`].
#[derive(Debug, Default)]
pub struct SparseBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    markers: Vec<usize>,
    solid_rows: Vec<usize>,
    dirichlet: Vec<DirichletTerm>,
    scratch: Vec<(usize, f64)>,
}

impl SparseBuilder {
    pub fn new(n: usize) -> Self {
        SparseBuilder {
            n,
            row_ptr: vec![0],
            ..Default::default()
        }
    }

    fn row(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Adds to entry `(current row, col)`.
    pub fn add(&mut self, col: usize, v: f64) {
        debug_assert!(col < self.n);
        self.scratch.push((col, v));
    }

    pub fn dirichlet(&mut self, weight: f64, source: BoundarySource) {
        let row = self.row();
        self.dirichlet.push(DirichletTerm { row, weight, source });
    }

    /// Marks the current row as differing from the unobstructed operator.
    pub fn mark(&mut self) {
        let r = self.row();
        self.markers.push(r);
    }

    /// Makes the current row an identity row.
    pub fn identity(&mut self) {
        let r = self.row();
        self.scratch.clear();
        self.scratch.push((r, 1.0));
        self.solid_rows.push(r);
    }

    /// Closes the current row, merging duplicate columns in insertion order.
    pub fn end_row(&mut self) {
        self.scratch.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < self.scratch.len() {
            let c = self.scratch[k].0;
            let mut v = self.scratch[k].1;
            k += 1;
            while k < self.scratch.len() && self.scratch[k].0 == c {
                v += self.scratch[k].1;
                k += 1;
            }
            self.cols.push(c);
            self.vals.push(v);
        }
        self.scratch.clear();
        self.row_ptr.push(self.cols.len());
    }

    pub fn finish(self) -> Result<SparseOperator> {
        if self.row() != self.n {
            return Err(Error::Dimension { expected: self.n, got: self.row() });
        }
        Ok(SparseOperator {
            n: self.n,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
            markers: self.markers,
            solid_rows: self.solid_rows,
            dirichlet: self.dirichlet,
            affine: vec![0.0; self.n],
            nullspace: None,
        })
    }
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        let mut b = SparseBuilder::new(n);
        for _ in 0..n {
            b.identity();
            b.end_row();
        }
        b.finish().unwrap()
    }

    /// Builds from `(row, col, value)` triplets.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|t| t.0);
        let mut b = SparseBuilder::new(n);
        let mut k = 0;
        for r in 0..n {
            while k < sorted.len() && sorted[k].0 == r {
                if sorted[k].1 >= n {
                    return Err(Error::Dimension { expected: n, got: sorted[k].1 });
                }
                b.add(sorted[k].1, sorted[k].2);
                k += 1;
            }
            b.end_row();
        }
        b.finish()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |k| vals[k])
    }

    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// Rows that differ from the unobstructed operator (excluding solid rows).
    pub fn markers(&self) -> &[usize] {
        &self.markers
    }

    pub fn solid_rows(&self) -> &[usize] {
        &self.solid_rows
    }

    pub fn is_solid_row(&self, r: usize) -> bool {
        self.solid_rows.binary_search(&r).is_ok()
    }

    pub fn dirichlet_terms(&self) -> &[DirichletTerm] {
        &self.dirichlet
    }

    /// Current Dirichlet contribution to the right-hand side.
    pub fn affine(&self) -> &[f64] {
        &self.affine
    }

    /// Recomputes [`SparseOperator::affine`] from body values (a function of
    /// the boundary point) and outer boundary data.
    pub fn refresh_affine(&mut self, body: &dyn Fn([f64; 2]) -> f64, outer: &BoundaryValues) {
        self.affine.iter_mut().for_each(|v| *v = 0.0);
        for t in &self.dirichlet {
            let g = match t.source {
                BoundarySource::Body { point } => body(point),
                ref s => outer.get(s),
            };
            self.affine[t.row] += t.weight * g;
        }
    }

    pub fn nullspace(&self) -> Option<&Nullspace> {
        self.nullspace.as_ref()
    }

    pub fn set_nullspace(&mut self, ns: Option<Nullspace>) {
        self.nullspace = ns;
    }

    /// Diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Copy with row `r` replaced by an identity row.
    pub fn with_identity_row(&self, r: usize) -> SparseOperator {
        let mut b = SparseBuilder::new(self.n);
        for q in 0..self.n {
            if q == r {
                b.add(r, 1.0);
            } else {
                let (cols, vals) = self.row(q);
                for (&c, &v) in cols.iter().zip(vals) {
                    b.add(c, v);
                }
            }
            b.end_row();
        }
        let mut out = b.finish().unwrap();
        out.solid_rows = self.solid_rows.clone();
        out.markers = self.markers.clone();
        out
    }

    /// Rows where `self` and `other` differ in pattern or value.
    pub fn differing_rows(&self, other: &SparseOperator) -> Vec<usize> {
        (0..self.n).filter(|&r| self.row(r) != other.row(r)).collect()
    }

    /// Dense row-major copy (small problems and tests).
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for r in 0..n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[r * n + c] = v;
            }
        }
        d
    }

    /// Half bandwidths `(below, above)` of the pattern.
    pub fn bandwidth(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for r in 0..self.n {
            for &c in self.row(r).0 {
                if c < r {
                    kl = kl.max(r - c);
                } else {
                    ku = ku.max(c - r);
                }
            }
        }
        (kl, ku)
    }
}
