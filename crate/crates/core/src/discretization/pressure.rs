//! Pressure gradient, velocity divergence, and the pressure Poisson operator
//! built as their composition.

use super::field::StaggeredField;
use super::sparse::{Nullspace, SparseBuilder, SparseOperator};
use crate::error::Result;
use crate::geometry::{CellKind, EdgeStatus, Geometry};
use crate::grid::{FieldKind, StaggeredGrid};
use crate::linsolve::{SeparableOperator, YTransform};

/// Floor of the effective cell volume, relative to the full cell.
pub const VOLUME_FLOOR: f64 = 0.01;

/// Rows of `(cell, coefficient)` lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rows {
    ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Rows {
    fn new() -> Self {
        Rows {
            ptr: vec![0],
            ..Default::default()
        }
    }

    fn push_row(&mut self, e: &[(usize, f64)]) {
        for &(c, v) in e {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.ptr.push(self.cols.len());
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }
}

/// Pressure gradient at the `u` and `v` faces, as linear maps from cell
/// values. Outer boundary and solid faces have empty rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientOp {
    pub u: Rows,
    pub v: Rows,
}

/// Velocity divergence per cell: `sum(coef * face value) - body_flux . u_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceOp {
    /// Per cell: `(u face index, coefficient)`.
    pub u: Rows,
    pub v: Rows,
    /// Per cell: `sum(n len) / V_eff` over the body segments.
    pub body: Vec<[f64; 2]>,
    /// Effective volumes (zero in solid cells).
    pub volume: Vec<f64>,
}

/// Pressure values of `column` at height `y` near row `j`, linearly
/// interpolated towards the neighbouring non-solid cell.
fn column_interp(grid: &StaggeredGrid, geom: &Geometry, column: usize, j: usize, y: f64) -> Vec<(usize, f64)> {
    let ny = grid.ny();
    let yc = grid.y_centers();
    let c = column * ny + j;
    if y == yc[j] {
        return vec![(c, 1.0)];
    }
    let j2 = if y > yc[j] { j + 1 } else { j.wrapping_sub(1) };
    if j2 >= ny || geom.cell(ny, column, j2) == CellKind::Solid {
        return vec![(c, 1.0)];
    }
    let t = (y - yc[j]) / (yc[j2] - yc[j]);
    vec![(c, 1.0 - t), (column * ny + j2, t)]
}

fn row_interp(grid: &StaggeredGrid, geom: &Geometry, row: usize, i: usize, x: f64) -> Vec<(usize, f64)> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let xc = grid.x_centers();
    let c = i * ny + row;
    if x == xc[i] {
        return vec![(c, 1.0)];
    }
    let i2 = if x > xc[i] { i + 1 } else { i.wrapping_sub(1) };
    if i2 >= nx || geom.cell(ny, i2, row) == CellKind::Solid {
        return vec![(c, 1.0)];
    }
    let t = (x - xc[i]) / (xc[i2] - xc[i]);
    vec![(c, 1.0 - t), (i2 * ny + row, t)]
}

fn difference(lo: Vec<(usize, f64)>, hi: Vec<(usize, f64)>, d: f64) -> Vec<(usize, f64)> {
    hi.into_iter()
        .map(|(c, v)| (c, v / d))
        .chain(lo.into_iter().map(|(c, v)| (c, -v / d)))
        .collect()
}

/// Gradient stencils. On cut faces the two pressures are first aligned with
/// the relocated node.
pub fn gradient_operator(grid: &StaggeredGrid, geom: &Geometry) -> GradientOp {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (xc, yc) = (grid.x_centers(), grid.y_centers());
    let mut u = Rows::new();
    for i in 0..=nx {
        for j in 0..ny {
            let f = &geom.cut.u_faces[i * ny + j];
            if i == 0 || i == nx || f.status == EdgeStatus::Solid {
                u.push_row(&[]);
                continue;
            }
            let d = xc[i] - xc[i - 1];
            let e = match f.status {
                EdgeStatus::Cut => {
                    let y = f.mid();
                    difference(column_interp(grid, geom, i - 1, j, y), column_interp(grid, geom, i, j, y), d)
                }
                _ => vec![(i * ny + j, 1.0 / d), ((i - 1) * ny + j, -1.0 / d)],
            };
            u.push_row(&e);
        }
    }
    let mut v = Rows::new();
    for i in 0..nx {
        for j in 0..=ny {
            let f = &geom.cut.v_faces[i * (ny + 1) + j];
            if j == 0 || j == ny || f.status == EdgeStatus::Solid {
                v.push_row(&[]);
                continue;
            }
            let d = yc[j] - yc[j - 1];
            let e = match f.status {
                EdgeStatus::Cut => {
                    let x = f.mid();
                    difference(row_interp(grid, geom, j - 1, i, x), row_interp(grid, geom, j, i, x), d)
                }
                _ => vec![(i * ny + j, 1.0 / d), (i * ny + j - 1, -1.0 / d)],
            };
            v.push_row(&e);
        }
    }
    GradientOp { u, v }
}

/// Finite-volume divergence with face apertures and body fluxes.
pub fn divergence_operator(grid: &StaggeredGrid, geom: &Geometry) -> DivergenceOp {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut u = Rows::new();
    let mut v = Rows::new();
    let mut body = vec![[0.0; 2]; nx * ny];
    let mut volume = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let c = i * ny + j;
            if geom.cell(ny, i, j) == CellKind::Solid {
                u.push_row(&[]);
                v.push_row(&[]);
                continue;
            }
            let vol = geom.fluid_area(grid, i, j).max(VOLUME_FLOOR * grid.cell_area(i, j));
            volume[c] = vol;
            let len = |f: &crate::geometry::EdgeClip| match f.status {
                EdgeStatus::Solid => 0.0,
                _ => f.fluid_len(),
            };
            let (w, e) = (i * ny + j, (i + 1) * ny + j);
            let uf = &geom.cut.u_faces;
            u.push_row(&[(w, -len(&uf[w]) / vol), (e, len(&uf[e]) / vol)]);
            let (s, n) = (i * (ny + 1) + j, i * (ny + 1) + j + 1);
            let vf = &geom.cut.v_faces;
            v.push_row(&[(s, -len(&vf[s]) / vol), (n, len(&vf[n]) / vol)]);
            if let Some(cc) = geom.cut.cut_cell(ny, i, j) {
                let mut b = [0.0; 2];
                for seg in &cc.segments {
                    b[0] += seg.normal[0] * seg.len / vol;
                    b[1] += seg.normal[1] * seg.len / vol;
                }
                body[c] = b;
            }
        }
    }
    DivergenceOp { u, v, body, volume }
}

impl DivergenceOp {
    /// Divergence of `(u, v)` with body velocity `vb`.
    pub fn apply(&self, u: &[f64], v: &[f64], vb: [f64; 2]) -> Vec<f64> {
        let du = self.u.apply(u);
        let dv = self.v.apply(v);
        (0..du.len())
            .map(|c| du[c] + dv[c] - (self.body[c][0] * vb[0] + self.body[c][1] * vb[1]))
            .collect()
    }
}

impl GradientOp {
    pub fn apply(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.u.apply(p), self.v.apply(p))
    }
}

/// Pressure gradient sampled at the `u` and `v` faces.
pub fn gradient(grid: &StaggeredGrid, geom: &Geometry, p: &StaggeredField) -> (StaggeredField, StaggeredField) {
    let (gu, gv) = gradient_operator(grid, geom).apply(&p.values);
    (
        StaggeredField {
            kind: FieldKind::U,
            values: gu,
        },
        StaggeredField {
            kind: FieldKind::V,
            values: gv,
        },
    )
}

/// Divergence per pressure cell; zero in solid cells.
pub fn divergence(grid: &StaggeredGrid, geom: &Geometry, u: &StaggeredField, v: &StaggeredField) -> StaggeredField {
    let d = divergence_operator(grid, geom).apply(&u.values, &v.values, geom.body_velocity());
    StaggeredField {
        kind: FieldKind::P,
        values: d,
    }
}

/// Unobstructed pressure Laplacian with Neumann conditions on every side.
pub fn pressure_separable(grid: &StaggeredGrid) -> SeparableOperator {
    let nx = grid.nx();
    let (hx, xc) = (grid.hx(), grid.x_centers());
    let mut sub = vec![0.0; nx];
    let mut sup = vec![0.0; nx];
    let mut diag = vec![0.0; nx];
    for i in 0..nx {
        if i > 0 {
            sub[i] = 1.0 / (hx[i] * (xc[i] - xc[i - 1]));
        }
        if i + 1 < nx {
            sup[i] = 1.0 / (hx[i] * (xc[i + 1] - xc[i]));
        }
        diag[i] = -(sub[i] + sup[i]);
    }
    let hy = grid.hy();
    SeparableOperator {
        sub,
        diag,
        sup,
        y_coef: 1.0 / (hy * hy),
        nmodes: grid.ny(),
        transform: YTransform::Dct2,
        null_weights: Some(hx.to_vec()),
    }
}

/// Pressure Poisson operator `D Gr` together with its gradient and
/// divergence factors.
#[derive(Debug, Clone)]
pub struct PressureSystem {
    pub operator: SparseOperator,
    pub gradient: GradientOp,
    pub divergence: DivergenceOp,
}

/// Assembles `L = D Gr` on the pressure cells. Solid cells get identity
/// rows; the operator keeps the constant nullspace on the fluid cells.
pub fn assemble_pressure_poisson(grid: &StaggeredGrid, geom: &Geometry) -> Result<PressureSystem> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let gradient = gradient_operator(grid, geom);
    let divergence = divergence_operator(grid, geom);
    let sep = pressure_separable(grid);
    let n = nx * ny;
    let mut b = SparseBuilder::new(n);
    let mut weights = vec![0.0; n];
    for i in 0..nx {
        for j in 0..ny {
            let c = i * ny + j;
            let kind = geom.cell(ny, i, j);
            if kind == CellKind::Solid {
                b.identity();
                b.end_row();
                continue;
            }
            weights[c] = divergence.volume[c];
            let regular = kind == CellKind::Fluid && faces_fluid(grid, geom, i, j);
            if regular {
                for (col, v) in sep.row(c) {
                    b.add(col, v);
                }
            } else {
                let mut e = Vec::with_capacity(16);
                for (f, d) in divergence.u.row(c) {
                    e.extend(gradient.u.row(f).map(|(col, g)| (col, d * g)));
                }
                for (f, d) in divergence.v.row(c) {
                    e.extend(gradient.v.row(f).map(|(col, g)| (col, d * g)));
                }
                let merged = super::helmholtz::merge(e);
                if merged != sep.row(c) {
                    b.mark();
                }
                for (col, v) in merged {
                    b.add(col, v);
                }
            }
            b.end_row();
        }
    }
    let mut operator = b.finish()?;
    operator.set_nullspace(Some(Nullspace { weights }));
    Ok(PressureSystem {
        operator,
        gradient,
        divergence,
    })
}

fn faces_fluid(grid: &StaggeredGrid, geom: &Geometry, i: usize, j: usize) -> bool {
    let ny = grid.ny();
    let uf = &geom.cut.u_faces;
    let vf = &geom.cut.v_faces;
    [uf[i * ny + j], uf[(i + 1) * ny + j], vf[i * (ny + 1) + j], vf[i * (ny + 1) + j + 1]]
        .iter()
        .all(|f| f.status == EdgeStatus::Fluid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSetBody;
    use crate::grid::{build_grid, GridSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> StaggeredGrid {
        build_grid(&GridSpec::uniform([-2.0, 2.0, -2.0, 2.0], n, n)).unwrap()
    }

    #[test]
    fn no_body_interior_row() {
        let g = grid(8);
        let ps = assemble_pressure_poisson(&g, &Geometry::empty(&g)).unwrap();
        let h2 = 0.25;
        let c = 3 * 8 + 4;
        let (cols, vals) = ps.operator.row(c);
        assert_eq!(cols, &[c - 8, c - 1, c, c + 1, c + 8]);
        for (&col, &v) in cols.iter().zip(vals) {
            let expect = if col == c { -4.0 / h2 } else { 1.0 / h2 };
            assert!((v - expect).abs() < 1e-12);
        }
        assert!(ps.operator.markers().is_empty());
    }

    #[test]
    fn linear_fields() {
        let g = grid(8);
        let geom = Geometry::empty(&g);
        let p = StaggeredField::sample(&g, FieldKind::P, |x| x[0]);
        let (gu, gv) = gradient(&g, &geom, &p);
        for i in 1..8 {
            for j in 0..8 {
                assert!((gu.values[i * 8 + j] - 1.0).abs() < 1e-13);
            }
        }
        assert!(gv.max_abs() < 1e-13);
        let u = StaggeredField::sample(&g, FieldKind::U, |x| x[0]);
        let v = StaggeredField::zeros(&g, FieldKind::V);
        let d = divergence(&g, &geom, &u, &v);
        assert!(d.values.iter().all(|&x| (x - 1.0).abs() < 1e-13));
        let u = StaggeredField::sample(&g, FieldKind::U, |_| 0.7);
        let v = StaggeredField::sample(&g, FieldKind::V, |_| -0.2);
        let d = divergence(&g, &geom, &u, &v);
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn constant_flow_is_divergence_free_around_body() {
        let g = grid(32);
        let body = LevelSetBody::circle([0.1, 0.0], 0.7).unwrap();
        let mut geom = Geometry::build(&g, Some(&body), 0.0).unwrap();
        let vel = [0.3, -0.4];
        geom.body.as_mut().unwrap().velocity = vel;
        let u = StaggeredField::sample(&g, FieldKind::U, |_| vel[0]);
        let v = StaggeredField::sample(&g, FieldKind::V, |_| vel[1]);
        let d = divergence(&g, &geom, &u, &v);
        assert!(d.max_abs() < 1e-10, "{}", d.max_abs());
    }

    #[test]
    fn discrete_duality_without_body() {
        let g = grid(12);
        let geom = Geometry::empty(&g);
        let gr = gradient_operator(&g, &geom);
        let dv = divergence_operator(&g, &geom);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (nx, ny) = (12, 12);
        for _ in 0..20 {
            let mut u: Vec<f64> = (0..g.len(FieldKind::U)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut v: Vec<f64> = (0..g.len(FieldKind::V)).map(|_| rng.random_range(-1.0..1.0)).collect();
            // homogeneous normal velocity on the outer boundary
            for j in 0..ny {
                u[j] = 0.0;
                u[nx * ny + j] = 0.0;
            }
            for i in 0..nx {
                v[i * (ny + 1)] = 0.0;
                v[i * (ny + 1) + ny] = 0.0;
            }
            let p: Vec<f64> = (0..nx * ny).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = dv.apply(&u, &v, [0.0, 0.0]);
            let lhs: f64 = (0..nx * ny).map(|c| d[c] * p[c] * dv.volume[c]).sum();
            let (gu, gv) = gr.apply(&p);
            // face control volumes: h * (distance between the adjacent centres)
            let h = g.hy();
            let rhs: f64 = u.iter().zip(&gu).map(|(a, b)| a * b * h * h).sum::<f64>()
                + v.iter().zip(&gv).map(|(a, b)| a * b * h * h).sum::<f64>();
            assert!((lhs + rhs).abs() < 1e-12, "{lhs} {rhs}");
        }
    }

    #[test]
    fn operator_matches_composition() {
        let g = grid(48);
        let body = LevelSetBody::circle([0.0, 0.0], 0.5).unwrap();
        let geom = Geometry::build(&g, Some(&body), 0.0).unwrap();
        let ps = assemble_pressure_poisson(&g, &geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p: Vec<f64> = (0..g.len(FieldKind::P)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lp = ps.operator.apply(&p);
            let (gu, gv) = ps.gradient.apply(&p);
            let dp = ps.divergence.apply(&gu, &gv, [0.0, 0.0]);
            for c in 0..p.len() {
                if ps.operator.is_solid_row(c) {
                    assert_eq!(lp[c], p[c]);
                } else {
                    assert!((lp[c] - dp[c]).abs() <= 1e-12 * dp[c].abs().max(1.0), "{c}: {} {}", lp[c], dp[c]);
                }
            }
        }
    }

    #[test]
    fn fluid_rows_conserve() {
        let g = grid(40);
        let body = LevelSetBody::circle([0.05, -0.03], 0.6).unwrap();
        let geom = Geometry::build(&g, Some(&body), 0.0).unwrap();
        let ps = assemble_pressure_poisson(&g, &geom).unwrap();
        let a = &ps.operator;
        let ones = vec![1.0; a.dim()];
        let r = a.apply(&ones);
        let w = &a.nullspace().unwrap().weights;
        for c in 0..a.dim() {
            if !a.is_solid_row(c) {
                assert!(r[c].abs() < 1e-9, "row sum {c}: {}", r[c]);
            }
        }
        // left nullspace
        let mut col = vec![0.0; a.dim()];
        for rr in 0..a.dim() {
            if a.is_solid_row(rr) {
                continue;
            }
            let (cs, vs) = a.row(rr);
            for (&c, &v) in cs.iter().zip(vs) {
                col[c] += w[rr] * v;
            }
        }
        assert!(col.iter().all(|x| x.abs() < 1e-9));
        let diff = a.differing_rows(&assemble_pressure_poisson(&g, &Geometry::empty(&g)).unwrap().operator);
        let mut expect: Vec<usize> = a.markers().iter().chain(a.solid_rows()).copied().collect();
        expect.sort();
        assert_eq!(diff, expect);
        assert!(a.max_row_nnz() <= 9);
    }
}
