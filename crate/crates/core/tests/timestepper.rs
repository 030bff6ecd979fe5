use cutcell::discretization::{assemble_pressure_poisson, pressure_separable, OuterBc};
use cutcell::forces::{coefficients, state_force};
use cutcell::geometry::{CellKind, Geometry, LevelSetBody, Motion, NodeKind};
use cutcell::grid::{build_grid, FieldKind, GridSpec, StaggeredGrid};
use cutcell::linsolve::{CapacitanceSolver, FastPlan, KrylovSettings};
use cutcell::timestepper::{project, FlowState, Simulation, SolverChoice, StepConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn grid(bounds: [f64; 4], nx: usize, ny: usize) -> StaggeredGrid {
    build_grid(&GridSpec::uniform(bounds, nx, ny)).unwrap()
}

fn cylinder() -> LevelSetBody {
    LevelSetBody::circle([0.0, 0.0], 0.5).unwrap()
}

fn run(sim: &mut Simulation, steps: usize) -> Vec<FlowState> {
    let mut s = sim.initial_state().unwrap();
    let mut out = vec![s.clone()];
    for _ in 0..steps {
        s = sim.advance(&s).unwrap();
        out.push(s.clone());
    }
    out
}

fn drag_series(g: &StaggeredGrid, states: &[FlowState], bc: &OuterBc, re: f64) -> Vec<[f64; 2]> {
    states[1..]
        .iter()
        .map(|s| {
            let c = coefficients(&state_force(g, s, bc, re).unwrap(), s.t, 1.0, 1.0);
            [c.cd, c.cl]
        })
        .collect()
}

#[test]
fn quiescent_state_stays_zero() {
    let g = grid([-2.0, 2.0, -1.0, 1.0], 40, 20);
    let cfg = StepConfig::new(100.0, 0.01, OuterBc::confined());
    let mut sim = Simulation::new(g, Some(cylinder()), cfg).unwrap();
    for s in run(&mut sim, 10) {
        assert!(s.u.iter().chain(&s.v).chain(&s.p).all(|&x| x == 0.0));
    }
}

#[test]
fn uniform_flow_without_body_is_preserved() {
    let g = grid([-2.0, 2.0, -1.0, 1.0], 32, 16);
    for solver in [SolverChoice::Direct, SolverChoice::Iterative] {
        let mut cfg = StepConfig::new(100.0, 0.02, OuterBc::channel(1.0));
        cfg.solver = solver;
        let mut sim = Simulation::new(g.clone(), None, cfg).unwrap();
        for s in run(&mut sim, 10) {
            assert!(s.u.iter().all(|&x| (x - 1.0).abs() < 1e-10), "{solver:?}");
            assert!(s.v.iter().all(|&x| x.abs() < 1e-10));
        }
    }
}

#[test]
fn projection_annihilates_gradients() {
    // oracle: a discrete gradient field is its own gradient part
    let g = grid([0.0, 2.0, 0.0, 1.0], 48, 24);
    let geom = Geometry::empty(&g);
    let ps = assemble_pressure_poisson(&g, &geom).unwrap();
    let cap = CapacitanceSolver::build(&ps.operator, Arc::new(FastPlan::new(pressure_separable(&g)).unwrap())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let psi: Vec<f64> = (0..g.len(FieldKind::P)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (mut u, mut v) = ps.gradient.apply(&psi);
    let phi = project(&g, &ps, |r| cap.solve(r), &mut u, &mut v, [0.0; 2], 1.5).unwrap();
    let norm = u.iter().chain(&v).fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(norm <= 1e-9, "residual velocity {norm:e}");
    assert!(phi.iter().any(|x| x.abs() > 0.1));
}

#[test]
fn first_step_is_divergence_free() {
    let g = grid([-4.0, 4.0, -4.0, 4.0], 128, 128);
    let cfg = StepConfig::new(1000.0, 0.005, OuterBc::channel(1.0));
    let mut sim = Simulation::new(g.clone(), Some(cylinder()), cfg).unwrap();
    let s = sim.initial_state().unwrap();
    assert!(s.max_divergence(&g) <= 1e-10);
    let s = sim.advance(&s).unwrap();
    let d = s.max_divergence(&g);
    assert!(d <= 1e-10, "max divergence {d:e}");
}

#[test]
fn fixed_body_builds_operators_once() {
    let g = grid([-2.0, 2.0, -2.0, 2.0], 32, 32);
    let cfg = StepConfig::new(100.0, 0.01, OuterBc::channel(1.0));
    let mut sim = Simulation::new(g.clone(), Some(cylinder()), cfg).unwrap();
    let states = run(&mut sim, 10);
    assert_eq!(sim.stats().operator_builds, 1);
    assert_eq!(sim.stats().capacitance_builds, 1);
    assert!(sim.stats().n_c.iter().all(|&n| n > 0));
    for s in &states {
        assert!(s.max_divergence(&g) <= 1e-9);
        assert_eq!(s.geometry, states[0].geometry);
    }
}

#[test]
fn moving_body_changes_cells_near_the_boundary_only() {
    let g = grid([-3.0, 3.0, -1.0, 1.0], 150, 50);
    let body = cylinder().with_motion(Motion::Oscillating { alpha: 0.25 });
    let mut cfg = StepConfig::new(800.0, 0.02, OuterBc::confined());
    cfg.solver = SolverChoice::Iterative;
    let mut sim = Simulation::new(g.clone(), Some(body), cfg).unwrap();
    let mut s = sim.initial_state().unwrap();
    let h = g.max_spacing();
    let ny = g.ny();
    let perimeter = std::f64::consts::PI;
    let mut steps_with_fresh = 0;
    for _ in 0..60 {
        let fresh0 = sim.stats().fresh_nodes;
        let s1 = sim.advance(&s).unwrap();
        assert!(s1.max_divergence(&g) <= 1e-9);
        let (before, after) = (&s.geometry, &s1.geometry);
        let shift = (body.center(s1.t)[0] - body.center(s.t)[0]).abs();
        assert!(shift <= body.velocity(s1.t)[0].abs() * 0.02 + 1e-12);
        for (c, (a, b)) in before.mask.cells.iter().zip(&after.mask.cells).enumerate() {
            if a != b {
                let p = g.position(FieldKind::P, c / ny, c % ny);
                let r = body.at(s.t).phi(p);
                assert!(r.abs() <= shift + h, "cell {c} changed at distance {r}");
            }
        }
        let fresh_cells = before
            .mask
            .cells
            .iter()
            .zip(&after.mask.cells)
            .filter(|(a, b)| **a == CellKind::Solid && **b != CellKind::Solid)
            .count();
        assert!((fresh_cells as f64) <= perimeter / h, "{fresh_cells} fresh cells");
        let fresh = sim.stats().fresh_nodes - fresh0;
        assert!((fresh as f64) <= 2.0 * perimeter / h, "{fresh} fresh nodes");
        if fresh > 0 {
            steps_with_fresh += 1;
            let uncovered = [FieldKind::U, FieldKind::V].iter().any(|&kind| {
                let (o, n) = (before.mask.nodes(kind), after.mask.nodes(kind));
                o.iter().zip(n).any(|(a, b)| *a == NodeKind::Solid && *b != NodeKind::Solid)
            });
            assert!(uncovered);
        }
        assert!(s1.u.iter().chain(&s1.v).chain(&s1.p).all(|x| x.is_finite()));
        s = s1;
    }
    assert!(steps_with_fresh > 0);
}

#[test]
fn symmetric_flow_stays_symmetric() {
    let g = grid([-2.0, 4.0, -2.0, 2.0], 48, 32);
    let cfg = StepConfig::new(200.0, 0.02, OuterBc::channel(1.0));
    let mut sim = Simulation::new(g.clone(), Some(cylinder()), cfg).unwrap();
    let states = run(&mut sim, 100);
    let (nx, ny) = (g.nx(), g.ny());
    let mut worst: f64 = 0.0;
    for s in &states {
        for i in 0..=nx {
            for j in 0..ny {
                worst = worst.max((s.u[i * ny + j] - s.u[i * ny + ny - 1 - j]).abs());
            }
        }
        for i in 0..nx {
            for j in 0..=ny {
                worst = worst.max((s.v[i * (ny + 1) + j] + s.v[i * (ny + 1) + ny - j]).abs());
            }
        }
    }
    assert!(worst <= 1e-8, "asymmetry {worst:e}");
}

#[test]
fn direct_and_iterative_paths_agree() {
    let g = grid([-2.0, 4.0, -2.0, 2.0], 48, 32);
    let bc = OuterBc::channel(1.0);
    let tol = 1e-12;
    let mut series = Vec::new();
    for solver in [SolverChoice::Direct, SolverChoice::Iterative] {
        let mut cfg = StepConfig::new(200.0, 0.02, bc);
        cfg.solver = solver;
        cfg.krylov = KrylovSettings { tol, ..KrylovSettings::default() };
        let mut sim = Simulation::new(g.clone(), Some(LevelSetBody::circle([0.01, 0.03], 0.5).unwrap()), cfg).unwrap();
        series.push(drag_series(&g, &run(&mut sim, 20), &bc, 200.0));
    }
    let diff = series[0]
        .iter()
        .zip(&series[1])
        .fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs()));
    assert!(diff <= 10.0 * tol, "drag difference {diff:e}");
}

#[test]
fn identical_runs_are_bitwise_identical() {
    let g = grid([-2.0, 4.0, -2.0, 2.0], 40, 24);
    let bc = OuterBc::channel(1.0);
    let body = LevelSetBody::circle([0.02, 0.05], 0.5).unwrap();
    let a = run(&mut Simulation::new(g.clone(), Some(body), StepConfig::new(300.0, 0.02, bc)).unwrap(), 15);
    let b = run(&mut Simulation::new(g.clone(), Some(body), StepConfig::new(300.0, 0.02, bc)).unwrap(), 15);
    assert_eq!(drag_series(&g, &a, &bc, 300.0), drag_series(&g, &b, &bc, 300.0));
    assert_eq!(a.last().unwrap().u, b.last().unwrap().u);
}

#[test]
fn bad_configurations_are_rejected() {
    let g = grid([-3.0, 3.0, -1.0, 1.0], 60, 20);
    let body = cylinder().with_motion(Motion::Oscillating { alpha: 0.25 });
    let cfg = StepConfig::new(800.0, 0.01, OuterBc::confined());
    assert!(Simulation::new(g.clone(), Some(body), cfg.clone()).is_err());
    let mut ok = cfg.clone();
    ok.rebuild_direct = true;
    assert!(Simulation::new(g.clone(), Some(body), ok).is_ok());
    let mut bad = cfg;
    bad.dt = -1.0;
    assert!(Simulation::new(g, None, bad).is_err());
}

#[test]
fn cfl_violations_are_counted() {
    let g = grid([-2.0, 2.0, -1.0, 1.0], 32, 16);
    let cfg = StepConfig::new(100.0, 0.2, OuterBc::channel(1.0));
    let mut sim = Simulation::new(g, None, cfg).unwrap();
    run(&mut sim, 2);
    assert_eq!(sim.stats().cfl_warnings, 2);
}
