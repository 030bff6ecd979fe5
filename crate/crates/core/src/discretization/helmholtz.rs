//! Momentum Helmholtz operators `alpha I - nu Lap_h`.

use super::boundary::OuterBc;
use super::field::Layout;
use super::sparse::{BoundarySource, BoundaryValues, SparseBuilder, SparseOperator};
use super::stencil::{Anchor, Lines};
use crate::error::{Error, Result};
use crate::geometry::{EdgeStatus, Geometry};
use crate::grid::{FieldKind, StaggeredGrid};
use crate::linsolve::SeparableOperator;

/// Three-point weights of the second derivative on a nonuniform stencil with
/// distances `dm` (below) and `dp` (above): `(wm, wc, wp)`.
pub fn three_point(dm: f64, dp: f64) -> (f64, f64, f64) {
    let wm = 2.0 / (dm * (dm + dp));
    let wp = 2.0 / (dp * (dm + dp));
    (wm, -2.0 / (dm * dp), wp)
}

/// Coefficient of the identity term: `3/(2 dt)` for the second-order
/// backward difference, `1/dt` for a backward Euler step.
pub fn bdf_alpha(dt: f64, second_order: bool) -> f64 {
    if second_order {
        1.5 / dt
    } else {
        1.0 / dt
    }
}

fn check_component(kind: FieldKind) -> Result<()> {
    match kind {
        FieldKind::U | FieldKind::V => Ok(()),
        _ => Err(Error::InvalidArgument(format!("{kind:?} is not a velocity component"))),
    }
}

/// Unobstructed Helmholtz operator of a velocity component.
pub fn helmholtz_separable(grid: &StaggeredGrid, kind: FieldKind, alpha: f64, nu: f64, bc: &OuterBc) -> Result<SeparableOperator> {
    check_component(kind)?;
    let (xf, xc) = (grid.x_faces(), grid.x_centers());
    let nx = grid.nx();
    let dist: Vec<(f64, f64)> = match kind {
        FieldKind::U => (1..nx).map(|i| (xf[i] - xf[i - 1], xf[i + 1] - xf[i])).collect(),
        _ => (0..nx)
            .map(|i| {
                let dm = if i == 0 { xc[0] - xf[0] } else { xc[i] - xc[i - 1] };
                let dp = if i + 1 == nx { xf[nx] - xc[i] } else { xc[i + 1] - xc[i] };
                (dm, dp)
            })
            .collect(),
    };
    let mut sub = Vec::with_capacity(dist.len());
    let mut diag = Vec::with_capacity(dist.len());
    let mut sup = Vec::with_capacity(dist.len());
    for &(dm, dp) in &dist {
        let (wm, wc, wp) = three_point(dm, dp);
        sub.push(-nu * wm);
        diag.push(alpha - nu * wc);
        sup.push(-nu * wp);
    }
    let hy = grid.hy();
    Ok(SeparableOperator {
        sub,
        diag,
        sup,
        y_coef: -nu / (hy * hy),
        nmodes: Layout::new(grid, kind).shape().1,
        transform: bc.transform(kind),
        null_weights: None,
    })
}

struct Row {
    entries: Vec<(usize, f64)>,
    dirichlet: Vec<(f64, BoundarySource)>,
    diag: f64,
    fluid_neighbours: usize,
}

impl Row {
    /// Adds `coef * value(anchor on line l)` to the left-hand side.
    fn anchor(&mut self, lines: &Lines, l: usize, a: &Anchor, coef: f64) {
        match *a {
            Anchor::Node { slot, .. } => {
                let k = lines.unknown(l, slot).expect("node anchors are unknowns");
                self.entries.push((k, coef));
                self.fluid_neighbours += 1;
            }
            Anchor::Body { pos } => self.dirichlet.push((
                -coef,
                BoundarySource::Body {
                    point: lines.point(l, pos),
                },
            )),
            Anchor::Data { source, .. } => self.dirichlet.push((-coef, source)),
            // walls at rest
            Anchor::Mirror { .. } => {}
        }
    }
}

/// Assembles `alpha I - nu Lap_h` for one velocity component around the
/// body of `geom`. Dirichlet data is recorded as terms of the affine vector,
/// which is left at zero; see [`SparseOperator::refresh_affine`].
pub fn helmholtz_operator(
    grid: &StaggeredGrid,
    geom: &Geometry,
    kind: FieldKind,
    alpha: f64,
    nu: f64,
    bc: &OuterBc,
) -> Result<SparseOperator> {
    check_component(kind)?;
    if !(alpha >= 0.0 && alpha.is_finite() && nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument("need alpha >= 0 and nu > 0".into()));
    }
    let sep = helmholtz_separable(grid, kind, alpha, nu, bc)?;
    let lines = Lines::new(grid, geom, kind, bc.wall_sign());
    let layout = lines.layout;
    let n = layout.len();
    let mut b = SparseBuilder::new(n);
    for k in 0..n {
        let (i, j) = layout.ij(k);
        let (l, s) = lines.line_slot(i, j);
        let f = lines.face(l, s);
        if f.status == EdgeStatus::Solid {
            b.identity();
            b.end_row();
            continue;
        }
        let row = generic_row(&lines, l, s, alpha, nu)?;
        for &(w, src) in &row.dirichlet {
            b.dirichlet(w, src);
        }
        if is_regular(&lines, l, s) {
            for (c, v) in sep.row(k) {
                b.add(c, v);
            }
        } else {
            let mut e = row.entries;
            e.push((k, row.diag));
            let merged = merge(e);
            if merged != sep.row(k) {
                b.mark();
            }
            for (c, v) in merged {
                b.add(c, v);
            }
        }
        b.end_row();
    }
    b.finish()
}

/// [`helmholtz_operator`] with `alpha = 3/(2 dt)`, `nu = 1/Re`, and the
/// affine vector filled from the body velocity and `outer`.
pub fn assemble_helmholtz(
    grid: &StaggeredGrid,
    geom: &Geometry,
    re: f64,
    dt: f64,
    kind: FieldKind,
    bc: &OuterBc,
    outer: &BoundaryValues,
) -> Result<SparseOperator> {
    if !(re > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument("Re and dt must be positive".into()));
    }
    let mut a = helmholtz_operator(grid, geom, kind, bdf_alpha(dt, true), 1.0 / re, bc)?;
    let vb = geom.body_velocity();
    let g = if kind == FieldKind::U { vb[0] } else { vb[1] };
    a.refresh_affine(&|_| g, outer);
    Ok(a)
}


pub(crate) fn merge(mut e: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    e.sort_by_key(|x| x.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(e.len());
    for (c, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

fn is_regular(lines: &Lines, l: usize, s: usize) -> bool {
    let fluid = |l: usize, s: usize| lines.face(l, s).status == EdgeStatus::Fluid;
    if !fluid(l, s) {
        return false;
    }
    if s > 0 && !fluid(l, s - 1) || s + 1 < lines.nslots() && !fluid(l, s + 1) {
        return false;
    }
    for l2 in [l - 1, l + 1] {
        if !lines.is_boundary_line(l2) && !fluid(l2, s) {
            return false;
        }
    }
    true
}

fn generic_row(lines: &Lines, l: usize, s: usize, alpha: f64, nu: f64) -> Result<Row> {
    let f = lines.face(l, s);
    let q = f.mid();
    let mut row = Row {
        entries: Vec::with_capacity(8),
        dirichlet: Vec::new(),
        diag: alpha,
        fluid_neighbours: 0,
    };

    // along the face
    let dn = lines.next_down(l, s);
    let up = lines.next_up(l, s);
    let dist = |a: &Anchor| match *a {
        Anchor::Mirror { wall, .. } => 2.0 * (q - wall).abs(),
        _ => (q - a.pos()).abs(),
    };
    let floor = 1e-6 * (f.b - f.a);
    let (dm, dp) = (dist(&dn).max(floor), dist(&up).max(floor));
    let (wm, wc, wp) = three_point(dm, dp);
    row.diag -= nu * wc;
    for (a, w) in [(dn, wm), (up, wp)] {
        match a {
            Anchor::Mirror { sign, .. } => row.diag -= nu * w * sign,
            _ => row.anchor(lines, l, &a, -nu * w),
        }
    }

    // across the face
    let x = lines.line_coord(l);
    let mut side = Vec::with_capacity(2);
    for l2 in [l - 1, l + 1] {
        let full = (lines.line_coord(l2) - x).abs();
        match lines.crossing(l, l2, q) {
            Some(r) => {
                let d = (r - x).abs().max(1e-6 * full);
                side.push((d, None, Some(lines.normal_point(r, q))));
            }
            None => side.push((full, Some(lines.bracket(l2, s, q)), None)),
        }
    }
    let (wm, wc, wp) = three_point(side[0].0, side[1].0);
    row.diag -= nu * wc;
    for ((_, br, pt), w) in side.into_iter().zip([wm, wp]) {
        if let Some(br) = br {
            for (a, t) in br.terms() {
                if *t != 0.0 {
                    row.anchor(lines, br.line, a, -nu * w * t);
                }
            }
        }
        if let Some(point) = pt {
            row.dirichlet.push((nu * w, BoundarySource::Body { point }));
        }
    }
    if f.status == EdgeStatus::Cut && row.fluid_neighbours == 0 {
        let (i, j) = lines.ij(l, s);
        return Err(Error::UnderResolved(format!(
            "{:?} node ({i}, {j}) has no fluid neighbour",
            lines.kind
        )));
    }
    Ok(row)
}
