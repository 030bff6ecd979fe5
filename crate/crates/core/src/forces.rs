//! Hydrodynamic force on the body and the short-time drag law.

use crate::discretization::{boundary_values, sample_component, BoundarySource, Lines, OuterBc, OuterValues};
use crate::error::{Error, Result};
use crate::geometry::{CellKind, Geometry};
use crate::grid::{FieldKind, StaggeredGrid};
use crate::timestepper::FlowState;

/// Force on the body split into its pressure and viscous parts.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BodyForce {
    pub pressure: [f64; 2],
    pub viscous: [f64; 2],
}

impl BodyForce {
    pub fn total(&self) -> [f64; 2] {
        [self.pressure[0] + self.viscous[0], self.pressure[1] + self.viscous[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceCoefficients {
    /// Nondimensional time `2 U t / D`.
    pub t: f64,
    pub cd: f64,
    pub cl: f64,
    pub cd_pressure: f64,
    pub cd_viscous: f64,
}

/// Distance of the shear probe from the body, in units of the local
/// grid spacing.
pub const SHEAR_PROBE: f64 = 0.5;

/// Pressure at `q`, bilinear between cell centers with solid cells left out.
fn pressure_at(grid: &StaggeredGrid, geom: &Geometry, p: &[f64], q: [f64; 2]) -> Option<f64> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (xc, yc) = (grid.x_centers(), grid.y_centers());
    let bracket = |c: &[f64], x: f64| {
        let n = c.len();
        let k = c.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
        let t = ((x - c[k]) / (c[k + 1] - c[k])).clamp(0.0, 1.0);
        (k, t)
    };
    let (i, tx) = bracket(xc, q[0]);
    let (j, ty) = bracket(yc, q[1]);
    let (mut s, mut w) = (0.0, 0.0);
    for (di, wx) in [(0, 1.0 - tx), (1, tx)] {
        for (dj, wy) in [(0, 1.0 - ty), (1, ty)] {
            let (a, b) = (i + di, j + dj);
            if a >= nx || b >= ny || geom.cell(ny, a, b) == CellKind::Solid {
                continue;
            }
            s += wx * wy * p[a * ny + b];
            w += wx * wy;
        }
    }
    (w > 1e-12).then(|| s / w)
}

/// Force exerted by the fluid on the body:
/// `sum over boundary segments of (-p n + nu du/dn) len`, with `n` pointing
/// into the fluid. The surface pressure is extrapolated from two points on
/// the normal at distances `h` and `2h`; the normal derivative is a one-sided
/// difference between the body velocity and the velocity at distance
/// `SHEAR_PROBE * h`.
#[allow(clippy::too_many_arguments)]
pub fn body_force(
    grid: &StaggeredGrid,
    geom: &Geometry,
    u: &[f64],
    v: &[f64],
    p: &[f64],
    outer: &OuterValues,
    bc: &OuterBc,
    re: f64,
) -> Result<BodyForce> {
    let mut f = BodyForce::default();
    if !geom.has_body() {
        return Ok(f);
    }
    let nu = 1.0 / re;
    let vb = geom.body_velocity();
    let lu = Lines::new(grid, geom, FieldKind::U, bc.wall_sign());
    let lv = Lines::new(grid, geom, FieldKind::V, bc.wall_sign());
    let bu = boundary_values(grid, FieldKind::U, u, outer);
    let bv = boundary_values(grid, FieldKind::V, v, outer);
    let ou = |s: BoundarySource| bu.get(&s);
    let ov = |s: BoundarySource| bv.get(&s);
    let b = grid.bounds();
    let inside = |q: [f64; 2]| q[0] > b[0] && q[0] < b[1] && q[1] > b[2] && q[1] < b[3];
    for seg in geom.cut.segments() {
        if seg.len == 0.0 {
            continue;
        }
        let (m, n) = (seg.mid, seg.normal);
        let h = grid.hx()[grid.locate_x(m[0])].max(grid.hy());
        let at = |d: f64| [m[0] + d * n[0], m[1] + d * n[1]];
        let (q1, q2) = (at(h), at(2.0 * h));
        if !inside(q2) {
            return Err(Error::UnderResolved(format!(
                "force probe at ({:.4}, {:.4}) leaves the domain",
                q2[0], q2[1]
            )));
        }
        let missing = || Error::UnderResolved(format!("no fluid pressure near ({:.4}, {:.4})", m[0], m[1]));
        let p1 = pressure_at(grid, geom, p, q1).ok_or_else(missing)?;
        let p2 = pressure_at(grid, geom, p, q2).ok_or_else(missing)?;
        let pm = 2.0 * p1 - p2;
        let d = SHEAR_PROBE * h;
        let qs = at(d);
        let du = (sample_component(&lu, u, &ou, qs) - vb[0]) / d;
        let dv = (sample_component(&lv, v, &ov, qs) - vb[1]) / d;
        f.pressure[0] -= pm * n[0] * seg.len;
        f.pressure[1] -= pm * n[1] * seg.len;
        f.viscous[0] += nu * du * seg.len;
        f.viscous[1] += nu * dv * seg.len;
    }
    Ok(f)
}

/// [`body_force`] on a flow state.
pub fn state_force(grid: &StaggeredGrid, s: &FlowState, bc: &OuterBc, re: f64) -> Result<BodyForce> {
    body_force(grid, &s.geometry, &s.u, &s.v, &s.p, &s.outer, bc, re)
}

/// Nondimensional time and force coefficients for free-stream speed
/// `speed` and body diameter `diameter` (unit density).
pub fn coefficients(f: &BodyForce, t: f64, speed: f64, diameter: f64) -> ForceCoefficients {
    let q = 2.0 / (speed * speed * diameter);
    ForceCoefficients {
        t: 2.0 * speed * t / diameter,
        cd: q * f.total()[0],
        cl: q * f.total()[1],
        cd_pressure: q * f.pressure[0],
        cd_viscous: q * f.viscous[0],
    }
}

/// Short-time drag of an impulsively started cylinder,
/// `4 sqrt(2 pi / (Re T)) + (2 pi / Re)(9 - 15 / sqrt(pi))`.
pub fn predicted_drag(re: f64, t: f64) -> Result<f64> {
    if !(re > 0.0) || !re.is_finite() {
        return Err(Error::InvalidArgument(format!("Reynolds number must be positive, got {re}")));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let pi = std::f64::consts::PI;
    Ok(4.0 * (2.0 * pi / (re * t)).sqrt() + 2.0 * pi / re * (9.0 - 15.0 / pi.sqrt()))
}
