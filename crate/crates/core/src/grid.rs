//! Tensor-product staggered (MAC) grid.
//!
//! Vertical faces may be spaced arbitrarily along `x`; horizontal faces are
//! uniform along `y`, which is what the transform-based fast solver needs.
//!
//! Storage conventions used throughout the crate (all `x`-major, `y`
//! contiguous):
//!
//! | kind     | location                         | shape              | index           |
//! |----------|----------------------------------|--------------------|-----------------|
//! | `U`      | vertical face midpoints          | `(nx+1) x ny`      | `i*ny + j`      |
//! | `V`      | horizontal face midpoints        | `nx x (ny+1)`      | `i*(ny+1) + j`  |
//! | `P`      | cell centers                     | `nx x ny`          | `i*ny + j`      |
//! | `Corner` | cell corners                     | `(nx+1) x (ny+1)`  | `i*(ny+1) + j`  |

use crate::error::{Error, Result};

/// How the vertical faces are distributed along `x`.
#[derive(Debug, Clone, PartialEq)]
pub enum XSpacing {
    Uniform,
    /// `x(s) = x_min + L (1 + tanh(beta (2s - 1)) / tanh(beta)) / 2`, clustering
    /// faces toward both ends of the interval.
    Tanh { beta: f64 },
    /// Face coordinates given explicitly, `nx + 1` values.
    Explicit(Vec<f64>),
}

/// Bounds, resolution and `x` spacing of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub x_spacing: XSpacing,
}

impl GridSpec {
    pub fn uniform(bounds: [f64; 4], nx: usize, ny: usize) -> Self {
        GridSpec {
            x_min: bounds[0],
            x_max: bounds[1],
            y_min: bounds[2],
            y_max: bounds[3],
            nx,
            ny,
            x_spacing: XSpacing::Uniform,
        }
    }

    /// Uniform grid with spacing `h` in both directions. The domain extents
    /// must be integer multiples of `h` (to 1e-9 relative).
    pub fn with_spacing(bounds: [f64; 4], h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("mesh size must be positive, got {h}")));
        }
        let count = |len: f64, axis: &str| -> Result<usize> {
            let n = len / h;
            let rounded = n.round();
            if (n - rounded).abs() > 1e-9 * n.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "{axis} extent {len} is not a multiple of h = {h}"
                )));
            }
            Ok(rounded as usize)
        };
        let nx = count(bounds[1] - bounds[0], "x")?;
        let ny = count(bounds[3] - bounds[2], "y")?;
        Ok(GridSpec::uniform(bounds, nx, ny))
    }
}

/// Which staggered location a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    U,
    V,
    P,
    Corner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredGrid {
    x_faces: Vec<f64>,
    y_faces: Vec<f64>,
    x_centers: Vec<f64>,
    y_centers: Vec<f64>,
    hx: Vec<f64>,
    hy: f64,
}

/// Face coordinates of a uniform partition, built around the midpoint so that
/// symmetric domains produce exactly mirrored coordinates.
fn uniform_faces(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mid = 0.5 * (lo + hi);
    let h = (hi - lo) / n as f64;
    let half = 0.5 * n as f64;
    let mut faces: Vec<f64> = (0..=n).map(|k| mid + (k as f64 - half) * h).collect();
    faces[0] = lo;
    faces[n] = hi;
    faces
}

pub fn build_grid(spec: &GridSpec) -> Result<StaggeredGrid> {
    let GridSpec {
        x_min,
        x_max,
        y_min,
        y_max,
        nx,
        ny,
        ..
    } = *spec;
    if nx < 4 || ny < 4 {
        return Err(Error::InvalidGrid(format!(
            "resolution must be at least 4 x 4, got {nx} x {ny}"
        )));
    }
    if !(x_max > x_min) || !(y_max > y_min) {
        return Err(Error::InvalidGrid("empty domain".into()));
    }
    let x_faces = match &spec.x_spacing {
        XSpacing::Uniform => uniform_faces(x_min, x_max, nx),
        XSpacing::Tanh { beta } => {
            if !(*beta > 0.0) {
                return Err(Error::InvalidGrid(format!("tanh stretching needs beta > 0, got {beta}")));
            }
            let len = x_max - x_min;
            let mut f: Vec<f64> = (0..=nx)
                .map(|i| {
                    let s = i as f64 / nx as f64;
                    x_min + 0.5 * len * (1.0 + (beta * (2.0 * s - 1.0)).tanh() / beta.tanh())
                })
                .collect();
            f[0] = x_min;
            f[nx] = x_max;
            f
        }
        XSpacing::Explicit(faces) => {
            if faces.len() != nx + 1 {
                return Err(Error::InvalidGrid(format!(
                    "explicit x faces: expected {} values, got {}",
                    nx + 1,
                    faces.len()
                )));
            }
            faces.clone()
        }
    };
    if x_faces.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("x faces are not strictly increasing".into()));
    }
    let y_faces = uniform_faces(y_min, y_max, ny);
    StaggeredGrid::from_faces(x_faces, y_faces)
}

impl StaggeredGrid {
    /// Builds a grid from explicit face lists. `y_faces` must be uniform.
    pub fn from_faces(x_faces: Vec<f64>, y_faces: Vec<f64>) -> Result<Self> {
        let nx = x_faces.len().saturating_sub(1);
        let ny = y_faces.len().saturating_sub(1);
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "resolution must be at least 4 x 4, got {nx} x {ny}"
            )));
        }
        if x_faces.windows(2).any(|w| !(w[1] > w[0])) || y_faces.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("faces are not strictly increasing".into()));
        }
        let hy = (y_faces[ny] - y_faces[0]) / ny as f64;
        let dev = y_faces
            .windows(2)
            .map(|w| ((w[1] - w[0]) - hy).abs())
            .fold(0.0, f64::max);
        if dev > 1e-12 * hy {
            return Err(Error::InvalidGrid(format!(
                "y spacing must be uniform (max deviation {dev:e})"
            )));
        }
        let hx: Vec<f64> = x_faces.windows(2).map(|w| w[1] - w[0]).collect();
        let x_centers = x_faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let y_centers = y_faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(StaggeredGrid {
            x_faces,
            y_faces,
            x_centers,
            y_centers,
            hx,
            hy,
        })
    }

    pub fn nx(&self) -> usize {
        self.hx.len()
    }

    pub fn ny(&self) -> usize {
        self.y_centers.len()
    }

    pub fn x_faces(&self) -> &[f64] {
        &self.x_faces
    }

    pub fn y_faces(&self) -> &[f64] {
        &self.y_faces
    }

    pub fn x_centers(&self) -> &[f64] {
        &self.x_centers
    }

    pub fn y_centers(&self) -> &[f64] {
        &self.y_centers
    }

    /// Cell widths, `hx[i] = x_faces[i+1] - x_faces[i]`.
    pub fn hx(&self) -> &[f64] {
        &self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// `[x_min, x_max, y_min, y_max]`
    pub fn bounds(&self) -> [f64; 4] {
        [
            self.x_faces[0],
            self.x_faces[self.nx()],
            self.y_faces[0],
            self.y_faces[self.ny()],
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        self.hx.iter().copied().fold(self.hy, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.hx.iter().copied().fold(self.hy, f64::max)
    }

    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j < self.ny());
        self.hx[i] * self.hy
    }

    /// Number of stored values for a field kind.
    pub fn len(&self, kind: FieldKind) -> usize {
        let (a, b) = self.shape(kind);
        a * b
    }

    /// `(columns along x, values per column along y)` of a field kind.
    pub fn shape(&self, kind: FieldKind) -> (usize, usize) {
        let (nx, ny) = (self.nx(), self.ny());
        match kind {
            FieldKind::U => (nx + 1, ny),
            FieldKind::V => (nx, ny + 1),
            FieldKind::P => (nx, ny),
            FieldKind::Corner => (nx + 1, ny + 1),
        }
    }

    pub fn index(&self, kind: FieldKind, i: usize, j: usize) -> usize {
        let (_, m) = self.shape(kind);
        i * m + j
    }

    pub fn position(&self, kind: FieldKind, i: usize, j: usize) -> [f64; 2] {
        match kind {
            FieldKind::U => [self.x_faces[i], self.y_centers[j]],
            FieldKind::V => [self.x_centers[i], self.y_faces[j]],
            FieldKind::P => [self.x_centers[i], self.y_centers[j]],
            FieldKind::Corner => [self.x_faces[i], self.y_faces[j]],
        }
    }

    /// Regular (unrelocated) positions of every stored value of `kind`, in
    /// storage order. Cut-face relocation is handled by the geometry module.
    pub fn field_positions(&self, kind: FieldKind) -> Vec<[f64; 2]> {
        let (a, b) = self.shape(kind);
        let mut out = Vec::with_capacity(a * b);
        for i in 0..a {
            for j in 0..b {
                out.push(self.position(kind, i, j));
            }
        }
        out
    }

    /// Index of the cell column containing `x` (clamped to the grid).
    pub fn locate_x(&self, x: f64) -> usize {
        let nx = self.nx();
        match self.x_faces.binary_search_by(|f| f.partial_cmp(&x).unwrap()) {
            Ok(k) => k.min(nx - 1),
            Err(k) => k.saturating_sub(1).min(nx - 1),
        }
    }

    /// Index of the cell row containing `y` (clamped to the grid).
    pub fn locate_y(&self, y: f64) -> usize {
        let j = ((y - self.y_faces[0]) / self.hy).floor();
        (j.max(0.0) as usize).min(self.ny() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_partition() {
        let g = build_grid(&GridSpec::uniform([-1.0, 1.0, -1.0, 1.0], 4, 4)).unwrap();
        assert_eq!(g.x_faces(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.hy(), 0.5);
    }

    #[test]
    fn spacing_from_h() {
        let spec = GridSpec::with_spacing([-3.0, 3.0, -1.0, 1.0], 5e-3).unwrap();
        assert_eq!((spec.nx, spec.ny), (1200, 400));
        assert!(GridSpec::with_spacing([0.0, 1.0, 0.0, 1.0], 0.3).is_err());
    }

    #[test]
    fn tanh_stretching_is_monotone() {
        let spec = GridSpec {
            x_spacing: XSpacing::Tanh { beta: 2.0 },
            ..GridSpec::uniform([-10.0, 10.0, -10.0, 10.0], 64, 16)
        };
        let g = build_grid(&spec).unwrap();
        // direct evaluation of the map at 65 equispaced parameters
        for (i, &x) in g.x_faces().iter().enumerate() {
            let s = i as f64 / 64.0;
            let expect = -10.0 + 10.0 * (1.0 + (2.0 * (2.0 * s - 1.0)).tanh() / 2f64.tanh());
            assert!((x - expect).abs() < 1e-12);
        }
        assert!(g.hx().iter().all(|&h| h > 0.0));
        // clustered at the ends
        assert!(g.hx()[0] < g.hx()[32]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_grid(&GridSpec::uniform([0.0, 1.0, 0.0, 1.0], 3, 8)).is_err());
        let spec = GridSpec {
            x_spacing: XSpacing::Explicit(vec![0.0, 0.1, 0.05, 0.5, 1.0]),
            ..GridSpec::uniform([0.0, 1.0, 0.0, 1.0], 4, 4)
        };
        assert!(build_grid(&spec).is_err());
        let ys = vec![0.0, 0.1, 0.3, 0.6, 1.0];
        let xs = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        assert!(StaggeredGrid::from_faces(xs, ys).is_err());
    }

    #[test]
    fn positions() {
        let g = build_grid(&GridSpec::uniform([0.0, 1.0, 0.0, 1.0], 4, 4)).unwrap();
        assert_eq!(g.position(FieldKind::P, 0, 0), [0.125, 0.125]);
        let u = g.field_positions(FieldKind::U);
        assert_eq!(u.len(), 5 * 4);
        assert_eq!(u[g.index(FieldKind::U, 2, 1)], [0.5, 0.375]);
        let g = build_grid(&GridSpec::uniform([-1.0, 1.0, -1.0, 1.0], 4, 4)).unwrap();
        let v = g.field_positions(FieldKind::V);
        assert_eq!(v[g.index(FieldKind::V, 1, 1)], [-0.25, -0.5]);
        assert_eq!(v[g.index(FieldKind::V, 1, 2)], [-0.25, 0.0]);
        assert_eq!(v[g.index(FieldKind::V, 1, 3)], [-0.25, 0.5]);
    }

    #[test]
    fn symmetric_domain_gives_mirrored_faces() {
        let g = build_grid(&GridSpec::uniform([-3.0, 3.0, -1.0, 1.0], 300, 100)).unwrap();
        let ny = g.ny();
        for j in 0..=ny {
            assert_eq!(g.y_faces()[j], -g.y_faces()[ny - j]);
        }
        for j in 0..ny {
            assert_eq!(g.y_centers()[j], -g.y_centers()[ny - 1 - j]);
        }
    }

    #[test]
    fn area_sums_to_domain() {
        let spec = GridSpec {
            x_spacing: XSpacing::Tanh { beta: 1.5 },
            ..GridSpec::uniform([-2.0, 3.0, -1.0, 1.5], 37, 23)
        };
        let g = build_grid(&spec).unwrap();
        let total: f64 = (0..g.nx())
            .flat_map(|i| (0..g.ny()).map(move |j| (i, j)))
            .map(|(i, j)| g.cell_area(i, j))
            .sum();
        assert!((total - 5.0 * 2.5).abs() < 1e-12 * 12.5);
    }
}
