use crate::error::{Error, Result};
use crate::grid::{FieldKind, StaggeredGrid};

/// Values of one staggered field in grid storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField {
    pub kind: FieldKind,
    pub values: Vec<f64>,
}

impl StaggeredField {
    pub fn zeros(grid: &StaggeredGrid, kind: FieldKind) -> Self {
        StaggeredField {
            kind,
            values: vec![0.0; grid.len(kind)],
        }
    }

    pub fn from_values(grid: &StaggeredGrid, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len(kind) {
            return Err(Error::Dimension {
                expected: grid.len(kind),
                got: values.len(),
            });
        }
        Ok(StaggeredField { kind, values })
    }

    /// Samples `f` at the regular positions of `kind`.
    pub fn sample(grid: &StaggeredGrid, kind: FieldKind, f: impl Fn([f64; 2]) -> f64) -> Self {
        StaggeredField {
            kind,
            values: grid.field_positions(kind).into_iter().map(f).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Map between grid storage and the unknowns of a linear system.
///
/// Velocity unknowns exclude the outer boundary faces: `u` keeps the
/// interior vertical faces `i = 1..nx-1`, `v` the interior horizontal faces
/// `j = 1..ny-1`. Pressure uses every cell. Unknowns are ordered `x`-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub kind: FieldKind,
    pub nx: usize,
    pub ny: usize,
}

impl Layout {
    pub fn new(grid: &StaggeredGrid, kind: FieldKind) -> Self {
        Layout {
            kind,
            nx: grid.nx(),
            ny: grid.ny(),
        }
    }

    /// `(columns along x, unknowns per column)`
    pub fn shape(&self) -> (usize, usize) {
        match self.kind {
            FieldKind::U => (self.nx - 1, self.ny),
            FieldKind::V => (self.nx, self.ny - 1),
            FieldKind::P => (self.nx, self.ny),
            FieldKind::Corner => panic!("corner fields have no unknowns"),
        }
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unknown index of storage position `(i, j)`, if it is an unknown.
    pub fn unknown(&self, i: usize, j: usize) -> Option<usize> {
        match self.kind {
            FieldKind::U => (i >= 1 && i < self.nx).then(|| (i - 1) * self.ny + j),
            FieldKind::V => (j >= 1 && j < self.ny).then(|| i * (self.ny - 1) + j - 1),
            FieldKind::P => Some(i * self.ny + j),
            FieldKind::Corner => None,
        }
    }

    /// Storage `(i, j)` of unknown `k`.
    pub fn ij(&self, k: usize) -> (usize, usize) {
        match self.kind {
            FieldKind::U => (k / self.ny + 1, k % self.ny),
            FieldKind::V => (k / (self.ny - 1), k % (self.ny - 1) + 1),
            FieldKind::P => (k / self.ny, k % self.ny),
            FieldKind::Corner => panic!("corner fields have no unknowns"),
        }
    }

    fn storage(&self, i: usize, j: usize) -> usize {
        match self.kind {
            FieldKind::U | FieldKind::P => i * self.ny + j,
            FieldKind::V => i * (self.ny + 1) + j,
            FieldKind::Corner => i * (self.ny + 1) + j,
        }
    }

    /// Storage index of unknown `k`.
    pub fn storage_index(&self, k: usize) -> usize {
        let (i, j) = self.ij(k);
        self.storage(i, j)
    }

    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|k| field[self.storage_index(k)]).collect()
    }

    pub fn scatter(&self, x: &[f64], field: &mut [f64]) {
        for (k, &v) in x.iter().enumerate() {
            field[self.storage_index(k)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    #[test]
    fn layouts_round_trip() {
        let g = build_grid(&GridSpec::uniform([0.0, 1.0, 0.0, 1.0], 5, 4)).unwrap();
        for kind in [FieldKind::U, FieldKind::V, FieldKind::P] {
            let l = Layout::new(&g, kind);
            let f: Vec<f64> = (0..g.len(kind)).map(|k| k as f64).collect();
            let x = l.gather(&f);
            assert_eq!(x.len(), l.len());
            for (k, &v) in x.iter().enumerate() {
                let (i, j) = l.ij(k);
                assert_eq!(l.unknown(i, j), Some(k));
                assert_eq!(v as usize, g.index(kind, i, j));
            }
        }
        assert_eq!(Layout::new(&g, FieldKind::U).len(), 4 * 4);
        assert_eq!(Layout::new(&g, FieldKind::V).len(), 5 * 3);
    }
}
