//! Manufactured-solution refinement study of the cut-cell Helmholtz operator.

use super::config::SimConfig;
use crate::discretization::{boundary_values, helmholtz_operator, helmholtz_separable, Layout, OuterBc, OuterValues};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, NodeKind};
use crate::grid::{build_grid, FieldKind, GridSpec, StaggeredGrid};
use crate::linsolve::{CapacitanceSolver, FastPlan};
use std::fmt::Write as _;
use std::sync::Arc;

/// Smooth field vanishing on the walls `y = y_min` and `y = y_max`.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    kx: f64,
    ky: f64,
    x0: f64,
    y_min: f64,
}

impl Manufactured {
    pub fn new(domain: [f64; 4]) -> Self {
        let (lx, ly) = (domain[1] - domain[0], domain[3] - domain[2]);
        Manufactured {
            kx: 1.3 * std::f64::consts::PI / lx,
            ky: std::f64::consts::PI / ly,
            x0: domain[0] + 0.17 * lx,
            y_min: domain[2],
        }
    }

    pub fn value(&self, p: [f64; 2]) -> f64 {
        (self.kx * (p[0] - self.x0)).cos() * (self.ky * (p[1] - self.y_min)).sin()
    }

    /// `alpha u - Lap u`.
    pub fn forcing(&self, alpha: f64, p: [f64; 2]) -> f64 {
        (alpha + self.kx * self.kx + self.ky * self.ky) * self.value(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelError {
    pub n: usize,
    pub h: f64,
    pub max_error: f64,
    pub n_c: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelError>,
    /// `log2(e_N / e_2N)` between consecutive levels.
    pub orders: Vec<f64>,
    pub min_order: f64,
    pub passed: bool,
}

impl ConvergenceReport {
    pub fn render(&self) -> String {
        let mut s = String::from("level        h            max error    observed order\n");
        for (k, l) in self.levels.iter().enumerate() {
            let order = if k == 0 { String::from("-") } else { format!("{:.4}", self.orders[k - 1]) };
            let _ = writeln!(s, "{:<6} {:<12.6e} {:<12.6e} {}", l.n, l.h, l.max_error, order);
        }
        let _ = writeln!(s, "required order = {}", self.min_order);
        let _ = writeln!(s, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// Max-norm error of `alpha u - Lap u = f` for the `u` component on one grid,
/// with exact Dirichlet data on the body and the outer boundary. Solved with
/// the capacitance matrix method.
pub fn manufactured_error(grid: &StaggeredGrid, geom: &Geometry, alpha: f64, exact: &Manufactured) -> Result<LevelError> {
    let kind = FieldKind::U;
    let bc = OuterBc::confined();
    let mut a = helmholtz_operator(grid, geom, kind, alpha, 1.0, &bc)?;
    let stored: Vec<f64> = grid.field_positions(kind).into_iter().map(|p| exact.value(p)).collect();
    let outer = boundary_values(grid, kind, &stored, &OuterValues::zeros(grid));
    a.refresh_affine(&|p| exact.value(p), &outer);
    let lay = Layout::new(grid, kind);
    let nodes = geom.mask.nodes(kind);
    let mut rhs = vec![0.0; lay.len()];
    for (r, x) in rhs.iter_mut().enumerate() {
        let (i, j) = lay.ij(r);
        *x = exact.forcing(alpha, geom.node_position(grid, kind, i, j)) + a.affine()[r];
    }
    for &r in a.solid_rows() {
        rhs[r] = 0.0;
    }
    let plan = Arc::new(FastPlan::new(helmholtz_separable(grid, kind, alpha, 1.0, &bc)?)?);
    let solver = CapacitanceSolver::build(&a, plan)?;
    let x = solver.solve(&rhs)?;
    let mut err: f64 = 0.0;
    for (r, xr) in x.iter().enumerate() {
        let (i, j) = lay.ij(r);
        if nodes[grid.index(kind, i, j)] == NodeKind::Solid {
            continue;
        }
        err = err.max((xr - exact.value(geom.node_position(grid, kind, i, j))).abs());
    }
    Ok(LevelError {
        n: grid.nx(),
        h: grid.max_spacing(),
        max_error: err,
        n_c: solver.n_c(),
    })
}

/// Refinement ladder on the configured domain and body. Each level uses
/// `N` cells along `x` and the matching count along `y`.
pub fn convergence_study(cfg: &SimConfig) -> Result<ConvergenceReport> {
    let c = &cfg.convergence;
    if c.levels.len() < 2 {
        return Err(Error::invalid_value("convergence.levels", "the ladder needs at least 2 levels"));
    }
    let d = cfg.domain;
    let exact = Manufactured::new(d);
    let body = cfg.level_set();
    let mut levels = Vec::new();
    for &n in &c.levels {
        let ny = ((n as f64) * (d[3] - d[2]) / (d[1] - d[0])).round().max(2.0) as usize;
        let grid = build_grid(&GridSpec::uniform(d, n, ny))?;
        let geom = Geometry::build(&grid, body.as_ref(), 0.0)?;
        let e = manufactured_error(&grid, &geom, c.alpha, &exact)?;
        log::info!("level {n}: max error {:.3e}, n_c = {}", e.max_error, e.n_c);
        levels.push(e);
    }
    let orders: Vec<f64> = levels
        .windows(2)
        .map(|w| (w[0].max_error / w[1].max_error).ln() / (w[0].h / w[1].h).ln())
        .collect();
    let passed = orders.iter().all(|&p| p >= c.min_order);
    Ok(ConvergenceReport {
        levels,
        orders,
        min_order: c.min_order,
        passed,
    })
}
