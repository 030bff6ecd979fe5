//! Outer boundary conditions.

use super::sparse::BoundaryValues;
use crate::grid::{FieldKind, StaggeredGrid};
use crate::linsolve::YTransform;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcPreset {
    /// Uniform inflow on the west side, convective outflow on the east side,
    /// slip walls at the top and bottom.
    Channel,
    /// Fluid at rest on every outer side.
    Confined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterBc {
    pub preset: BcPreset,
    /// Inflow speed (channel only).
    pub inflow: f64,
    /// Shift the outflow profile so the net boundary flux vanishes.
    pub mass_correction: bool,
}

impl OuterBc {
    pub fn channel(inflow: f64) -> Self {
        OuterBc {
            preset: BcPreset::Channel,
            inflow,
            mass_correction: true,
        }
    }

    pub fn confined() -> Self {
        OuterBc {
            preset: BcPreset::Confined,
            inflow: 0.0,
            mass_correction: false,
        }
    }

    /// Ghost sign for `u` across the top and bottom walls.
    pub fn wall_sign(&self) -> f64 {
        match self.preset {
            BcPreset::Channel => 1.0,
            BcPreset::Confined => -1.0,
        }
    }

    /// `y` transform of the unobstructed operator of a velocity component.
    pub fn transform(&self, kind: FieldKind) -> YTransform {
        match (kind, self.preset) {
            (FieldKind::U, BcPreset::Channel) => YTransform::Dct2,
            (FieldKind::U, BcPreset::Confined) => YTransform::Dst2,
            _ => YTransform::Dst1,
        }
    }
}

/// Velocity data on the outer boundary.
///
/// `u` on the west and east sides and `v` on the south and north sides live
/// in the field storage itself. `v` on the west and east sides sits at the
/// side midpoints of the boundary cells and is kept here.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterValues {
    pub v_west: Vec<f64>,
    pub v_east: Vec<f64>,
}

impl OuterValues {
    pub fn zeros(grid: &StaggeredGrid) -> Self {
        OuterValues {
            v_west: vec![0.0; grid.ny() + 1],
            v_east: vec![0.0; grid.ny() + 1],
        }
    }
}

/// Boundary data of one velocity component in the form the assembled
/// operators reference.
pub fn boundary_values(grid: &StaggeredGrid, kind: FieldKind, u: &[f64], outer: &OuterValues) -> BoundaryValues {
    let (nx, ny) = (grid.nx(), grid.ny());
    match kind {
        FieldKind::U => BoundaryValues {
            west: u[..ny].to_vec(),
            east: u[nx * ny..].to_vec(),
            ..Default::default()
        },
        _ => BoundaryValues {
            west: outer.v_west.clone(),
            east: outer.v_east.clone(),
            ..Default::default()
        },
    }
}

/// Sets the initial boundary data of `bc`.
pub fn init_outer(grid: &StaggeredGrid, bc: &OuterBc, u: &mut [f64], v: &mut [f64], outer: &mut OuterValues) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let ub = match bc.preset {
        BcPreset::Channel => bc.inflow,
        BcPreset::Confined => 0.0,
    };
    for j in 0..ny {
        u[j] = ub;
        u[nx * ny + j] = ub;
    }
    for i in 0..nx {
        v[i * (ny + 1)] = 0.0;
        v[i * (ny + 1) + ny] = 0.0;
    }
    outer.v_west.iter_mut().for_each(|x| *x = 0.0);
    outer.v_east.iter_mut().for_each(|x| *x = 0.0);
}

/// Advances the outer boundary data over one step of length `dt`.
///
/// Channel: fixed inflow, and the outflow values follow
/// `d/dt + U d/dx = 0` with explicit Euler and a one-sided difference.
pub fn apply_outer_bcs(grid: &StaggeredGrid, bc: &OuterBc, dt: f64, u: &mut [f64], v: &mut [f64], outer: &mut OuterValues) {
    let (nx, ny) = (grid.nx(), grid.ny());
    match bc.preset {
        BcPreset::Confined => init_outer(grid, bc, u, v, outer),
        BcPreset::Channel => {
            let speed = bc.inflow;
            let h = grid.hx()[nx - 1];
            for j in 0..ny {
                u[j] = bc.inflow;
                let e = nx * ny + j;
                let w = (nx - 1) * ny + j;
                u[e] -= dt * speed * (u[e] - u[w]) / h;
            }
            for j in 1..ny {
                let vi = v[(nx - 1) * (ny + 1) + j];
                let ve = &mut outer.v_east[j];
                *ve -= dt * speed * (*ve - vi) / (0.5 * h);
                outer.v_west[j] = 0.0;
            }
            for i in 0..nx {
                v[i * (ny + 1)] = 0.0;
                v[i * (ny + 1) + ny] = 0.0;
            }
            if bc.mass_correction {
                correct_outflow(grid, u);
            }
        }
    }
}

/// Shifts the east `u` values uniformly so that the net flux through the
/// outer boundary vanishes.
pub fn correct_outflow(grid: &StaggeredGrid, u: &mut [f64]) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let inflow: f64 = u[..ny].iter().sum();
    let outflow: f64 = u[nx * ny..].iter().sum();
    let shift = (inflow - outflow) / ny as f64;
    u[nx * ny..].iter_mut().for_each(|x| *x += shift);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    fn setup() -> (StaggeredGrid, Vec<f64>, Vec<f64>, OuterValues) {
        let g = build_grid(&GridSpec::uniform([0.0, 2.0, 0.0, 1.0], 8, 4)).unwrap();
        let u = vec![1.0; g.len(FieldKind::U)];
        let v = vec![0.0; g.len(FieldKind::V)];
        let o = OuterValues::zeros(&g);
        (g, u, v, o)
    }

    #[test]
    fn uniform_state_is_unchanged() {
        let (g, mut u, mut v, mut o) = setup();
        apply_outer_bcs(&g, &OuterBc::channel(1.0), 0.1, &mut u, &mut v, &mut o);
        assert!(u.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn upwind_outflow_update() {
        let (g, mut u, mut v, mut o) = setup();
        let (nx, ny) = (g.nx(), g.ny());
        for j in 0..ny {
            u[nx * ny + j] = 1.1;
        }
        let dt = 0.01;
        let bc = OuterBc {
            mass_correction: false,
            ..OuterBc::channel(1.0)
        };
        apply_outer_bcs(&g, &bc, dt, &mut u, &mut v, &mut o);
        let h = g.hx()[nx - 1];
        for j in 0..ny {
            let expect = 1.1 - dt * 0.1 / h;
            assert!((u[nx * ny + j] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_correction_balances_flux() {
        let (g, mut u, mut v, mut o) = setup();
        let (nx, ny) = (g.nx(), g.ny());
        for j in 0..ny {
            u[nx * ny + j] = 1.0 + 0.3 * j as f64;
        }
        apply_outer_bcs(&g, &OuterBc::channel(1.0), 0.05, &mut u, &mut v, &mut o);
        let net: f64 = (0..ny).map(|j| u[nx * ny + j] - u[j]).sum();
        assert!(net.abs() < 1e-13);
    }

    #[test]
    fn confined_zeroes_boundaries() {
        let (g, mut u, mut v, mut o) = setup();
        v.iter_mut().for_each(|x| *x = 3.0);
        o.v_east[2] = 1.0;
        apply_outer_bcs(&g, &OuterBc::confined(), 0.1, &mut u, &mut v, &mut o);
        let (nx, ny) = (g.nx(), g.ny());
        for j in 0..ny {
            assert_eq!(u[j], 0.0);
            assert_eq!(u[nx * ny + j], 0.0);
        }
        for i in 0..nx {
            assert_eq!(v[i * (ny + 1)], 0.0);
            assert_eq!(v[i * (ny + 1) + ny], 0.0);
        }
        assert!(o.v_east.iter().all(|&x| x == 0.0));
    }
}
