//! Second-order semi-implicit projection scheme.
//!
//! Each step solves one Helmholtz problem per velocity component for the
//! intermediate velocity, then projects it onto discretely divergence-free
//! fields with a pressure Poisson solve:
//!
//! ```text
//! (3/(2dt)) u~ - nu Lap u~ = (4u^k - u^(k-1))/(2dt) - Gr P^k - 2N(u^k) + N(u^(k-1))
//! L phi = (3/(2dt)) D(u~),   u^(k+1) = u~ - (2dt/3) Gr phi,   P^(k+1) = P^k + phi
//! ```
//!
//! The first step is a backward Euler step with `N(u^0)`.

use crate::discretization::{
    apply_outer_bcs, assemble_pressure_poisson, bdf_alpha, boundary_values, convection_unknowns, helmholtz_operator,
    helmholtz_separable, init_outer, pressure_separable, Layout, OuterBc, OuterValues, PressureSystem, SparseOperator,
};
use crate::error::{Error, Result};
use crate::geometry::{CellKind, Geometry, LevelSetBody, NodeKind};
use crate::grid::{FieldKind, StaggeredGrid};
use crate::linsolve::{krylov_solve, CapacitanceSolver, FastPlan, KrylovSettings};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Capacitance matrix with the fast separable solver.
    Direct,
    /// Preconditioned BiCGSTAB.
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub re: f64,
    pub dt: f64,
    pub bc: OuterBc,
    pub solver: SolverChoice,
    pub krylov: KrylovSettings,
    /// Courant number above which a warning is issued.
    pub cfl: f64,
    /// Allow the direct solver with a moving body, refactoring every step.
    pub rebuild_direct: bool,
    /// Bound on the max-norm divergence left by iterative pressure solves.
    pub div_tol: f64,
}

impl StepConfig {
    pub fn new(re: f64, dt: f64, bc: OuterBc) -> Self {
        StepConfig {
            re,
            dt,
            bc,
            solver: SolverChoice::Direct,
            krylov: KrylovSettings::default(),
            cfl: 0.5,
            rebuild_direct: false,
            div_tol: 1e-11,
        }
    }

    pub fn validate(&self, moving: bool) -> Result<()> {
        if !(self.re > 0.0 && self.re.is_finite()) {
            return Err(Error::invalid_value("flow.re", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid_value("time.dt", "must be positive"));
        }
        if !(self.div_tol > 0.0) {
            return Err(Error::invalid_value("solver.div_tol", "must be positive"));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::invalid_value("time.cfl", "must be positive"));
        }
        self.krylov.validate()?;
        if moving && self.solver == SolverChoice::Direct && !self.rebuild_direct {
            return Err(Error::invalid_value(
                "solver.kind",
                "the direct solver needs a fixed body; use the iterative solver or set solver.rebuild_direct = true",
            ));
        }
        Ok(())
    }
}

/// Flow variables at one time level plus the history the scheme needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    /// Grid storage, outer boundary values included.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub outer: OuterValues,
    pub u_prev: Vec<f64>,
    pub v_prev: Vec<f64>,
    /// Convective terms at the unknowns, current and previous level.
    pub nu: Vec<f64>,
    pub nv: Vec<f64>,
    pub nu_prev: Vec<f64>,
    pub nv_prev: Vec<f64>,
    pub t: f64,
    pub step: usize,
    pub geometry: Geometry,
}

impl FlowState {
    /// Largest discrete divergence over non-solid cells.
    pub fn max_divergence(&self, grid: &StaggeredGrid) -> f64 {
        let d = crate::discretization::divergence_operator(grid, &self.geometry).apply(&self.u, &self.v, self.geometry.body_velocity());
        d.iter()
            .enumerate()
            .filter(|(c, _)| self.geometry.mask.cells[*c] != CellKind::Solid)
            .fold(0.0, |m, (_, x)| m.max(x.abs()))
    }

    pub fn max_speed(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Counters for inspection and tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepStats {
    pub operator_builds: usize,
    pub capacitance_builds: usize,
    /// Rows handled by the capacitance correction: `u`, `v`, pressure.
    pub n_c: [usize; 3],
    pub krylov_iterations: usize,
    pub fresh_nodes: usize,
    pub cfl_warnings: usize,
}

struct Operators {
    hu: SparseOperator,
    hv: SparseOperator,
    pressure: PressureSystem,
    direct: Option<[CapacitanceSolver; 3]>,
}

/// Time integrator for one configuration.
pub struct Simulation {
    grid: StaggeredGrid,
    body: Option<LevelSetBody>,
    cfg: StepConfig,
    ops: Option<Operators>,
    plans: Option<[Arc<FastPlan>; 3]>,
    stats: StepStats,
}

impl Simulation {
    pub fn new(grid: StaggeredGrid, body: Option<LevelSetBody>, cfg: StepConfig) -> Result<Self> {
        cfg.validate(body.as_ref().is_some_and(|b| b.is_moving()))?;
        Ok(Simulation {
            grid,
            body,
            cfg,
            ops: None,
            plans: None,
            stats: StepStats::default(),
        })
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn body(&self) -> Option<&LevelSetBody> {
        self.body.as_ref()
    }

    pub fn stats(&self) -> &StepStats {
        &self.stats
    }

    fn moving(&self) -> bool {
        self.body.as_ref().is_some_and(|b| b.is_moving())
    }

    fn nu(&self) -> f64 {
        1.0 / self.cfg.re
    }

    /// Impulsive start: free stream in the fluid, body velocity in the solid,
    /// projected onto divergence-free fields. `P^0 = 0`.
    pub fn initial_state(&mut self) -> Result<FlowState> {
        let grid = &self.grid.clone();
        let geom = Geometry::build(grid, self.body.as_ref(), 0.0)?;
        let vb = geom.body_velocity();
        let ub = match self.cfg.bc.preset {
            crate::discretization::BcPreset::Channel => self.cfg.bc.inflow,
            crate::discretization::BcPreset::Confined => 0.0,
        };
        let mut u: Vec<f64> = geom.mask.u_nodes.iter().map(|&k| if k == NodeKind::Solid { vb[0] } else { ub }).collect();
        let mut v: Vec<f64> = geom.mask.v_nodes.iter().map(|&k| if k == NodeKind::Solid { vb[1] } else { 0.0 }).collect();
        let mut outer = OuterValues::zeros(grid);
        init_outer(grid, &self.cfg.bc, &mut u, &mut v, &mut outer);
        if !self.moving() && self.ops.is_none() {
            self.ops = Some(self.build_operators(&geom)?);
        }
        match self.ops.take() {
            Some(ops) => {
                let cap = ops.direct.as_ref().map(|c| &c[2]);
                let ps = &ops.pressure;
                project(grid, ps, |r| self.solve_pressure(ps, cap, r, 1.0), &mut u, &mut v, vb, 1.0)?;
                self.ops = Some(ops);
            }
            None => {
                let ps = assemble_pressure_poisson(grid, &geom)?;
                project(grid, &ps, |r| self.solve_pressure(&ps, None, r, 1.0), &mut u, &mut v, vb, 1.0)?;
            }
        }
        let (nu, nv) = convection_unknowns(grid, &geom, &u, &v, &outer);
        Ok(FlowState {
            u_prev: u.clone(),
            v_prev: v.clone(),
            u,
            v,
            p: vec![0.0; grid.len(FieldKind::P)],
            outer,
            nu_prev: nu.clone(),
            nv_prev: nv.clone(),
            nu,
            nv,
            t: 0.0,
            step: 0,
            geometry: geom,
        })
    }

    fn build_operators(&mut self, geom: &Geometry) -> Result<Operators> {
        let grid = &self.grid;
        let (alpha, nu, bc) = (bdf_alpha(self.cfg.dt, true), self.nu(), self.cfg.bc);
        let hu = helmholtz_operator(grid, geom, FieldKind::U, alpha, nu, &bc)?;
        let hv = helmholtz_operator(grid, geom, FieldKind::V, alpha, nu, &bc)?;
        let pressure = assemble_pressure_poisson(grid, geom)?;
        self.stats.operator_builds += 1;
        let direct = if self.cfg.solver == SolverChoice::Direct {
            if self.plans.is_none() {
                self.plans = Some([
                    Arc::new(FastPlan::new(helmholtz_separable(grid, FieldKind::U, alpha, nu, &bc)?)?),
                    Arc::new(FastPlan::new(helmholtz_separable(grid, FieldKind::V, alpha, nu, &bc)?)?),
                    Arc::new(FastPlan::new(pressure_separable(grid))?),
                ]);
            }
            let plans = self.plans.as_ref().unwrap();
            let caps = [
                CapacitanceSolver::build(&hu, plans[0].clone())?,
                CapacitanceSolver::build(&hv, plans[1].clone())?,
                CapacitanceSolver::build(&pressure.operator, plans[2].clone())?,
            ];
            self.stats.capacitance_builds += 1;
            self.stats.n_c = [caps[0].n_c(), caps[1].n_c(), caps[2].n_c()];
            Some(caps)
        } else {
            None
        };
        Ok(Operators { hu, hv, pressure, direct })
    }

    fn krylov(&mut self, a: &SparseOperator, rhs: &[f64], x0: &[f64], tol: f64) -> Result<Vec<f64>> {
        let settings = KrylovSettings { tol, ..self.cfg.krylov };
        let (x, it) = krylov_solve(a, rhs, &settings, x0)?;
        self.stats.krylov_iterations += it;
        Ok(x)
    }

    /// Pressure solve for a projection with scale `alpha`. Krylov solves are
    /// tightened until the divergence left behind is below `div_tol`.
    fn solve_pressure(&mut self, ps: &PressureSystem, cap: Option<&CapacitanceSolver>, rhs: &[f64], alpha: f64) -> Result<Vec<f64>> {
        if let Some(c) = cap {
            return c.solve(rhs);
        }
        let floor = 1e-15f64.min(self.cfg.krylov.tol);
        let mut tol = self.cfg.krylov.tol;
        let mut x = self.krylov(&ps.operator, rhs, &vec![0.0; rhs.len()], tol)?;
        loop {
            let lx = ps.operator.apply(&x);
            let r = (0..rhs.len())
                .filter(|&k| !ps.operator.is_solid_row(k))
                .fold(0.0f64, |m, k| m.max((lx[k] - rhs[k]).abs()));
            if r / alpha <= self.cfg.div_tol || tol <= floor {
                return Ok(x);
            }
            tol = (tol * 1e-2).max(floor);
            match self.krylov(&ps.operator, rhs, &x, tol) {
                Ok(y) => x = y,
                Err(Error::NotConverged { residual, .. }) => {
                    log::debug!("pressure refinement stalled at residual {residual:e}");
                    return Ok(x);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Advances `s` by one step.
    pub fn advance(&mut self, s: &FlowState) -> Result<FlowState> {
        self.try_advance(s).map_err(|e| Error::Step {
            step: s.step + 1,
            source: Box::new(e),
        })
    }

    fn try_advance(&mut self, s: &FlowState) -> Result<FlowState> {
        let dt = self.cfg.dt;
        let t1 = s.t + dt;
        let first = s.step == 0;
        let alpha = bdf_alpha(dt, !first);
        self.check_cfl(s);

        let moving = self.moving();
        let geom = if moving {
            Geometry::build(&self.grid, self.body.as_ref(), t1)?
        } else {
            s.geometry.clone()
        };
        let vb = geom.body_velocity();

        // outer boundary data at the new level
        let mut u1 = s.u.clone();
        let mut v1 = s.v.clone();
        let mut outer = s.outer.clone();
        apply_outer_bcs(&self.grid, &self.cfg.bc, dt, &mut u1, &mut v1, &mut outer);

        let mut h = History {
            u0: s.u.clone(),
            v0: s.v.clone(),
            um: s.u_prev.clone(),
            vm: s.v_prev.clone(),
            p0: s.p.clone(),
            nu0: s.nu.clone(),
            nv0: s.nv.clone(),
            num: s.nu_prev.clone(),
            nvm: s.nv_prev.clone(),
        };
        if moving {
            self.fill_fresh(&s.geometry, &geom, &mut h, &s.outer);
        }

        let mut ops = match self.ops.take() {
            Some(o) if !moving => o,
            _ => self.build_operators(&geom)?,
        };
        let result = self.step_with(&mut ops, &geom, s, &h, first, alpha, u1, v1, outer, vb, t1);
        if !moving {
            self.ops = Some(ops);
        }
        result
    }

    #[allow(clippy::too_many_arguments)]
    fn step_with(
        &mut self,
        ops: &mut Operators,
        geom: &Geometry,
        s: &FlowState,
        h: &History,
        first: bool,
        alpha: f64,
        mut u1: Vec<f64>,
        mut v1: Vec<f64>,
        outer: OuterValues,
        vb: [f64; 2],
        t1: f64,
    ) -> Result<FlowState> {
        let grid = &self.grid.clone();
        let dt = self.cfg.dt;
        let (gpu, gpv) = ops.pressure.gradient.apply(&h.p0);
        let mut sol = Vec::with_capacity(2);
        for (kind, c) in [(FieldKind::U, 0), (FieldKind::V, 1)] {
            let lay = Layout::new(grid, kind);
            let (x0, xm, gp, n0, nm, new) = match kind {
                FieldKind::U => (&h.u0, &h.um, &gpu, &h.nu0, &h.num, &u1),
                _ => (&h.v0, &h.vm, &gpv, &h.nv0, &h.nvm, &v1),
            };
            let bvals = boundary_values(grid, kind, new, &outer);
            let mut boot = None;
            let a: &mut SparseOperator = if first {
                boot = Some(helmholtz_operator(grid, geom, kind, alpha, self.nu(), &self.cfg.bc)?);
                boot.as_mut().unwrap()
            } else if kind == FieldKind::U {
                &mut ops.hu
            } else {
                &mut ops.hv
            };
            a.refresh_affine(&|_| vb[c], &bvals);
            let aff = a.affine();
            let mut rhs = vec![0.0; lay.len()];
            for (r, out) in rhs.iter_mut().enumerate() {
                let st = lay.storage_index(r);
                *out = if first {
                    x0[st] / dt - n0[r]
                } else {
                    (4.0 * x0[st] - xm[st]) / (2.0 * dt) - (2.0 * n0[r] - nm[r])
                } - gp[st]
                    + aff[r];
            }
            for &r in a.solid_rows() {
                rhs[r] = vb[c];
            }
            let guess = lay.gather(x0);
            let x = match (&ops.direct, first) {
                (Some(caps), false) => caps[c].solve(&rhs)?,
                _ => {
                    let tol = if ops.direct.is_some() { 1e-13 } else { self.cfg.krylov.tol };
                    let a_ref: &SparseOperator = match &boot {
                        Some(b) => b,
                        None if kind == FieldKind::U => &ops.hu,
                        None => &ops.hv,
                    };
                    self.krylov(a_ref, &rhs, &guess, tol)?
                }
            };
            sol.push(x);
        }
        Layout::new(grid, FieldKind::U).scatter(&sol[0], &mut u1);
        Layout::new(grid, FieldKind::V).scatter(&sol[1], &mut v1);

        let cap = ops.direct.as_ref().map(|c| &c[2]);
        let ps = &ops.pressure;
        let phi = project(grid, ps, |r| self.solve_pressure(ps, cap, r, alpha), &mut u1, &mut v1, vb, alpha)?;
        let p: Vec<f64> = h.p0.iter().zip(&phi).map(|(a, b)| a + b).collect();
        let (nu, nv) = convection_unknowns(grid, geom, &u1, &v1, &outer);
        Ok(FlowState {
            u: u1,
            v: v1,
            p,
            outer,
            u_prev: h.u0.clone(),
            v_prev: h.v0.clone(),
            nu,
            nv,
            nu_prev: h.nu0.clone(),
            nv_prev: h.nv0.clone(),
            t: t1,
            step: s.step + 1,
            geometry: geom.clone(),
        })
    }

    fn check_cfl(&mut self, s: &FlowState) {
        let umax = s.max_speed();
        let limit = self.cfg.cfl * self.grid.min_spacing();
        if umax * self.cfg.dt > limit {
            self.stats.cfl_warnings += 1;
            log::warn!(
                "step {}: dt = {} exceeds the CFL bound {} (max speed {})",
                s.step + 1,
                self.cfg.dt,
                limit / umax,
                umax
            );
        }
    }

    /// Nodes that were solid at the previous level take the value of the
    /// nearest node that was already fluid, at both history levels.
    fn fill_fresh(&mut self, old: &Geometry, new: &Geometry, h: &mut History, outer: &OuterValues) {
        let grid = &self.grid;
        for kind in [FieldKind::U, FieldKind::V] {
            let (on, nn) = (old.mask.nodes(kind), new.mask.nodes(kind));
            let fresh: Vec<usize> = (0..on.len())
                .filter(|&k| on[k] == NodeKind::Solid && nn[k] != NodeKind::Solid)
                .collect();
            if fresh.is_empty() {
                continue;
            }
            self.stats.fresh_nodes += fresh.len();
            let (nx, ny) = grid.shape(kind);
            let (fa, fb) = match kind {
                FieldKind::U => (&mut h.u0, &mut h.um),
                _ => (&mut h.v0, &mut h.vm),
            };
            for &k in &fresh {
                let (i, j) = (k / ny, k % ny);
                if let Some(src) = nearest_fluid(on, nx, ny, i, j) {
                    fa[k] = fa[src];
                    fb[k] = fb[src];
                }
            }
            // history convection at fresh unknowns
            let (cu, cv) = convection_unknowns(grid, new, &h.u0, &h.v0, outer);
            let (cum, cvm) = convection_unknowns(grid, new, &h.um, &h.vm, outer);
            let lay = Layout::new(grid, kind);
            for &k in &fresh {
                let (i, j) = (k / ny, k % ny);
                if let Some(r) = lay.unknown(i, j) {
                    match kind {
                        FieldKind::U => {
                            h.nu0[r] = cu[r];
                            h.num[r] = cum[r];
                        }
                        _ => {
                            h.nv0[r] = cv[r];
                            h.nvm[r] = cvm[r];
                        }
                    }
                }
            }
        }
        // pressure in cells uncovered by the body
        let ny = grid.ny();
        let (oc, nc) = (&old.mask.cells, &new.mask.cells);
        let fresh: Vec<usize> = (0..oc.len()).filter(|&c| oc[c] == CellKind::Solid && nc[c] != CellKind::Solid).collect();
        let solid: Vec<NodeKind> = oc.iter().map(|&c| if c == CellKind::Solid { NodeKind::Solid } else { NodeKind::Fluid }).collect();
        for c in fresh {
            if let Some(src) = nearest_fluid(&solid, grid.nx(), ny, c / ny, c % ny) {
                h.p0[c] = h.p0[src];
            }
        }
    }
}

struct History {
    u0: Vec<f64>,
    v0: Vec<f64>,
    um: Vec<f64>,
    vm: Vec<f64>,
    p0: Vec<f64>,
    nu0: Vec<f64>,
    nv0: Vec<f64>,
    num: Vec<f64>,
    nvm: Vec<f64>,
}

/// Closest non-solid entry of an `nx` by `ny` array, searching outwards.
fn nearest_fluid(kinds: &[NodeKind], nx: usize, ny: usize, i: usize, j: usize) -> Option<usize> {
    for r in 1..=4isize {
        let mut best: Option<(isize, usize)> = None;
        for di in -r..=r {
            for dj in -r..=r {
                let (a, b) = (i as isize + di, j as isize + dj);
                if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                    continue;
                }
                let k = a as usize * ny + b as usize;
                if kinds[k] != NodeKind::Solid {
                    let d = di * di + dj * dj;
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, k));
                    }
                }
            }
        }
        if let Some((_, k)) = best {
            return Some(k);
        }
    }
    None
}

/// Projects `(u, v)` (grid storage) onto discretely divergence-free fields:
/// solves `L phi = scale D(u, v)` with `solve` and subtracts `Gr phi / scale`
/// at the unknowns. Returns `phi`.
#[allow(clippy::too_many_arguments)]
pub fn project(
    grid: &StaggeredGrid,
    ps: &PressureSystem,
    solve: impl FnOnce(&[f64]) -> Result<Vec<f64>>,
    u: &mut [f64],
    v: &mut [f64],
    vb: [f64; 2],
    scale: f64,
) -> Result<Vec<f64>> {
    let mut rhs: Vec<f64> = ps.divergence.apply(u, v, vb).iter().map(|d| scale * d).collect();
    for &s in ps.operator.solid_rows() {
        rhs[s] = 0.0;
    }
    let phi = solve(&rhs)?;
    let (gu, gv) = ps.gradient.apply(&phi);
    sub_unknowns(grid, FieldKind::U, u, &gu, 1.0 / scale);
    sub_unknowns(grid, FieldKind::V, v, &gv, 1.0 / scale);
    Ok(phi)
}

/// `field[unknowns] -= scale * g[unknowns]` (grid storage on both sides).
fn sub_unknowns(grid: &StaggeredGrid, kind: FieldKind, field: &mut [f64], g: &[f64], scale: f64) {
    let lay = Layout::new(grid, kind);
    for r in 0..lay.len() {
        let k = lay.storage_index(r);
        field[k] -= scale * g[k];
    }
}
