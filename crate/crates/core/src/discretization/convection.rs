//! Convective term `div(u u)` on the momentum control volumes, and vorticity.

use super::boundary::OuterValues;
use super::field::Layout;
use crate::geometry::{clip_rect, snap, CellKind, Geometry, NodeKind};
use crate::grid::{FieldKind, StaggeredGrid};
use rayon::prelude::*;

/// Floor of the control volume used for division, relative to the full volume.
pub const CV_FLOOR: f64 = 0.5;

struct Cv {
    area: f64,
    /// Fluid lengths of the bottom, right, top, left sides.
    sides: [f64; 4],
    /// `sum(-n len)` over the body chords.
    body: [f64; 2],
}

fn control_volume(geom: &Geometry, rect: [f64; 4], full: bool) -> Cv {
    let (w, h) = (rect[1] - rect[0], rect[3] - rect[2]);
    if full {
        return Cv {
            area: w * h,
            sides: [w, h, w, h],
            body: [0.0; 2],
        };
    }
    let tol = geom.cut.snap_tol();
    let phi = |x: f64, y: f64| snap(geom.phi([x, y]), tol);
    let corners = [
        phi(rect[0], rect[2]),
        phi(rect[1], rect[2]),
        phi(rect[1], rect[3]),
        phi(rect[0], rect[3]),
    ];
    let c = clip_rect(geom.body.as_ref(), rect, corners);
    let mut body = [0.0; 2];
    for s in &c.chords {
        body[0] -= s.normal[0] * s.len;
        body[1] -= s.normal[1] * s.len;
    }
    let side = |k: usize| match c.edges[k].status {
        crate::geometry::EdgeStatus::Solid => 0.0,
        _ => c.edges[k].fluid_len(),
    };
    Cv {
        area: c.area,
        sides: [side(0), side(1), side(2), side(3)],
        body,
    }
}

/// Velocities with solid nodes replaced by the body velocity.
fn effective(geom: &Geometry, kind: FieldKind, values: &[f64], vb: f64) -> Vec<f64> {
    values
        .iter()
        .zip(geom.mask.nodes(kind))
        .map(|(&x, &k)| if k == NodeKind::Solid { vb } else { x })
        .collect()
}

/// Convective term at the `u` and `v` unknowns (unknown ordering of
/// [`Layout`]); zero at solid nodes.
pub fn convection_unknowns(grid: &StaggeredGrid, geom: &Geometry, u: &[f64], v: &[f64], outer: &OuterValues) -> (Vec<f64>, Vec<f64>) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (xf, yf, xc, yc) = (grid.x_faces(), grid.y_faces(), grid.x_centers(), grid.y_centers());
    let vb = geom.body_velocity();
    let ue = effective(geom, FieldKind::U, u, vb[0]);
    let ve = effective(geom, FieldKind::V, v, vb[1]);
    let uu = |i: usize, j: usize| ue[i * ny + j];
    let vv = |i: usize, j: usize| ve[i * (ny + 1) + j];
    let cells = &geom.mask.cells;
    let fluid = |i: usize, j: usize| cells[i * ny + j] == CellKind::Fluid;

    let lu = Layout::new(grid, FieldKind::U);
    let nu: Vec<f64> = (0..lu.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = lu.ij(k);
            if geom.mask.u_nodes[i * ny + j] == NodeKind::Solid {
                return 0.0;
            }
            let rect = [xc[i - 1], xc[i], yf[j], yf[j + 1]];
            let cv = control_volume(geom, rect, !geom.has_body() || fluid(i - 1, j) && fluid(i, j));
            let c = uu(i, j);
            let e = 0.5 * (c + uu(i + 1, j));
            let w = 0.5 * (uu(i - 1, j) + c);
            let mut f = (e * e * cv.sides[1] - w * w * cv.sides[3]) + cv.body[0] * vb[0] * vb[0] + cv.body[1] * vb[1] * vb[0];
            if j + 1 < ny {
                let vn = 0.5 * (vv(i - 1, j + 1) + vv(i, j + 1));
                f += vn * 0.5 * (c + uu(i, j + 1)) * cv.sides[2];
            }
            if j > 0 {
                let vs = 0.5 * (vv(i - 1, j) + vv(i, j));
                f -= vs * 0.5 * (uu(i, j - 1) + c) * cv.sides[0];
            }
            let full = (rect[1] - rect[0]) * (rect[3] - rect[2]);
            f / cv.area.max(CV_FLOOR * full)
        })
        .collect();

    let lv = Layout::new(grid, FieldKind::V);
    let nv: Vec<f64> = (0..lv.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = lv.ij(k);
            if geom.mask.v_nodes[i * (ny + 1) + j] == NodeKind::Solid {
                return 0.0;
            }
            let rect = [xf[i], xf[i + 1], yc[j - 1], yc[j]];
            let cv = control_volume(geom, rect, !geom.has_body() || fluid(i, j - 1) && fluid(i, j));
            let c = vv(i, j);
            let n = 0.5 * (c + vv(i, j + 1));
            let s = 0.5 * (vv(i, j - 1) + c);
            let mut f = (n * n * cv.sides[2] - s * s * cv.sides[0]) + cv.body[0] * vb[0] * vb[1] + cv.body[1] * vb[1] * vb[1];
            let east = if i + 1 < nx { 0.5 * (c + vv(i + 1, j)) } else { outer.v_east[j] };
            let west = if i > 0 { 0.5 * (vv(i - 1, j) + c) } else { outer.v_west[j] };
            let ue_ = 0.5 * (uu(i + 1, j - 1) + uu(i + 1, j));
            let uw_ = 0.5 * (uu(i, j - 1) + uu(i, j));
            f += ue_ * east * cv.sides[1] - uw_ * west * cv.sides[3];
            let full = (rect[1] - rect[0]) * (rect[3] - rect[2]);
            f / cv.area.max(CV_FLOOR * full)
        })
        .collect();
    (nu, nv)
}

/// Convective term in grid storage; zero on the outer boundary and at solid nodes.
pub fn convection(grid: &StaggeredGrid, geom: &Geometry, u: &[f64], v: &[f64], outer: &OuterValues) -> (Vec<f64>, Vec<f64>) {
    let (nu, nv) = convection_unknowns(grid, geom, u, v, outer);
    let mut fu = vec![0.0; grid.len(FieldKind::U)];
    let mut fv = vec![0.0; grid.len(FieldKind::V)];
    Layout::new(grid, FieldKind::U).scatter(&nu, &mut fu);
    Layout::new(grid, FieldKind::V).scatter(&nv, &mut fv);
    (fu, fv)
}

/// Vorticity `dv/dx - du/dy` at the cell corners; zero on the outer
/// boundary and inside the body.
pub fn vorticity(grid: &StaggeredGrid, geom: &Geometry, u: &[f64], v: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (xc, yc) = (grid.x_centers(), grid.y_centers());
    let mut w = vec![0.0; (nx + 1) * (ny + 1)];
    for i in 1..nx {
        for j in 1..ny {
            if geom.corner_phi(grid, i, j) < 0.0 {
                continue;
            }
            let dv = (v[i * (ny + 1) + j] - v[(i - 1) * (ny + 1) + j]) / (xc[i] - xc[i - 1]);
            let du = (u[i * ny + j] - u[i * ny + j - 1]) / (yc[j] - yc[j - 1]);
            w[i * (ny + 1) + j] = dv - du;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LevelSetBody;
    use crate::grid::{build_grid, GridSpec};
    use proptest::prelude::*;

    fn grid(n: usize) -> StaggeredGrid {
        build_grid(&GridSpec::uniform([-1.5, 1.5, -1.5, 1.5], n, n)).unwrap()
    }

    fn sample(g: &StaggeredGrid, kind: FieldKind, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        g.field_positions(kind).into_iter().map(f).collect()
    }

    #[test]
    fn constant_and_shear_flows() {
        let g = grid(6);
        let geom = Geometry::empty(&g);
        let o = OuterValues::zeros(&g);
        let u = sample(&g, FieldKind::U, |_| 0.8);
        let v = vec![0.0; g.len(FieldKind::V)];
        let (nu, nv) = convection_unknowns(&g, &geom, &u, &v, &o);
        assert!(nu.iter().chain(&nv).all(|x| x.abs() < 1e-14));
        let u = sample(&g, FieldKind::U, |p| p[1]);
        let (nu, _) = convection_unknowns(&g, &geom, &u, &v, &o);
        assert!(nu.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn rotation_is_reflection_equivariant() {
        let g = grid(16);
        let body = LevelSetBody::circle([0.2, 0.0], 0.45).unwrap();
        let geom = Geometry::build(&g, Some(&body), 0.0).unwrap();
        let mut o = OuterValues::zeros(&g);
        let ny = g.ny();
        for j in 0..=ny {
            o.v_west[j] = g.x_faces()[0];
            o.v_east[j] = g.x_faces()[g.nx()];
        }
        let mut u = sample(&g, FieldKind::U, |p| -p[1]);
        let mut v = sample(&g, FieldKind::V, |p| p[0]);
        for (x, k) in u.iter_mut().zip(&geom.mask.u_nodes) {
            if *k == NodeKind::Solid {
                *x = 0.0;
            }
        }
        for (x, k) in v.iter_mut().zip(&geom.mask.v_nodes) {
            if *k == NodeKind::Solid {
                *x = 0.0;
            }
        }
        let (fu, fv) = convection(&g, &geom, &u, &v, &o);
        let nx = g.nx();
        for i in 0..=nx {
            for j in 0..ny {
                let a = fu[i * ny + j];
                let b = fu[i * ny + ny - 1 - j];
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "u ({i},{j}) {a} {b}");
            }
        }
        for i in 0..nx {
            for j in 0..=ny {
                let a = fv[i * (ny + 1) + j];
                let b = fv[i * (ny + 1) + ny - j];
                assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0), "v ({i},{j}) {a} {b}");
            }
        }
    }

    #[test]
    fn vorticity_examples() {
        let g = grid(8);
        let geom = Geometry::empty(&g);
        let n = g.nx();
        let interior = |w: &[f64], f: &dyn Fn(f64) -> bool| {
            (1..n).all(|i| (1..n).all(|j| f(w[i * (n + 1) + j])))
        };
        let w = vorticity(&g, &geom, &sample(&g, FieldKind::U, |p| -p[1]), &sample(&g, FieldKind::V, |p| p[0]));
        assert!(interior(&w, &|x| (x - 2.0).abs() < 1e-13));
        let w = vorticity(&g, &geom, &sample(&g, FieldKind::U, |_| 1.0), &sample(&g, FieldKind::V, |_| 0.0));
        assert!(interior(&w, &|x| x.abs() < 1e-13));
        let w = vorticity(&g, &geom, &sample(&g, FieldKind::U, |p| p[1]), &sample(&g, FieldKind::V, |_| 0.0));
        assert!(interior(&w, &|x| (x + 1.0).abs() < 1e-13));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn convection_is_quadratic(a in -3.0f64..3.0, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = grid(10);
            let geom = Geometry::empty(&g);
            let mut o = OuterValues::zeros(&g);
            o.v_east.iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
            let u: Vec<f64> = (0..g.len(FieldKind::U)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..g.len(FieldKind::V)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (nu, nv) = convection_unknowns(&g, &geom, &u, &v, &o);
            let sc = |x: &[f64]| x.iter().map(|y| a * y).collect::<Vec<_>>();
            let mut oa = o.clone();
            oa.v_east = sc(&o.v_east);
            let (mu, mv) = convection_unknowns(&g, &geom, &sc(&u), &sc(&v), &oa);
            for (p, q) in nu.iter().chain(&nv).zip(mu.iter().chain(&mv)) {
                prop_assert!((a * a * p - q).abs() <= 1e-12 * (1.0 + q.abs()));
            }
        }
    }
}
