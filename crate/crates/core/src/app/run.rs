use super::config::SimConfig;
use super::output::{write_vtk, DragRecord, DragSeries, Snapshot};
use crate::error::{Error, Result};
use crate::forces::{coefficients, predicted_drag, state_force};
use crate::geometry::Motion;
use crate::timestepper::{FlowState, Simulation, StepStats};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

pub const DRAG_FILE: &str = "drag.csv";
pub const REPORT_FILE: &str = "drag_report.txt";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DragSeries,
    pub csv: PathBuf,
    pub snapshots: Vec<PathBuf>,
    /// Largest post-step divergence over non-solid cells.
    pub max_divergence: f64,
    pub stats: StepStats,
    pub final_state: FlowState,
}

fn snapshot(cfg: &SimConfig, sim: &Simulation, s: &FlowState, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = cfg.output.dir.join(format!("snapshot_{:06}.vtk", s.step));
    let snap = Snapshot::from_state(sim.grid(), &s.geometry, &s.u, &s.v, &s.p);
    write_vtk(&path, sim.grid(), &snap, &format!("cutcell t = {}", s.t))?;
    out.push(path);
    Ok(())
}

/// Runs the configured case to `t_end`, calling `observe` after every step.
pub fn run_case_with(cfg: &SimConfig, mut observe: impl FnMut(&FlowState, &DragSeries)) -> Result<RunOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let grid = cfg.grid()?;
    let bc = cfg.outer_bc();
    let mut sim = Simulation::new(grid.clone(), cfg.level_set(), cfg.step_config())?;
    let mut state = sim.initial_state()?;
    let mut snapshots = Vec::new();
    snapshot(cfg, &sim, &state, &mut snapshots)?;
    let mut series = DragSeries::default();
    let mut max_div: f64 = 0.0;
    let diameter = cfg.diameter();
    for _ in 0..cfg.steps() {
        let clock = Instant::now();
        state = sim.advance(&state)?;
        let wall = clock.elapsed().as_secs_f64();
        max_div = max_div.max(state.max_divergence(&grid));
        if state.step % cfg.output.drag_every == 0 {
            let f = state_force(&grid, &state, &bc, cfg.re)?;
            let c = coefficients(&f, state.t, cfg.speed, diameter);
            series.push(DragRecord {
                t: c.t,
                cd: c.cd,
                cl: c.cl,
                cd_pressure: c.cd_pressure,
                cd_viscous: c.cd_viscous,
                wall,
            });
        }
        if cfg.output.snapshot_every > 0 && state.step % cfg.output.snapshot_every == 0 {
            snapshot(cfg, &sim, &state, &mut snapshots)?;
        }
        observe(&state, &series);
    }
    let csv = cfg.output.dir.join(DRAG_FILE);
    std::fs::write(&csv, series.to_csv())?;
    log::info!(
        "{} steps, {} drag records, max divergence {:.3e}",
        state.step,
        series.len(),
        max_div
    );
    Ok(RunOutput {
        series,
        csv,
        snapshots,
        max_divergence: max_div,
        stats: sim.stats().clone(),
        final_state: state,
    })
}

pub fn run_case(cfg: &SimConfig) -> Result<RunOutput> {
    run_case_with(cfg, |_, _| {})
}

#[derive(Debug, Clone, PartialEq)]
pub struct DragReport {
    pub t_lo: f64,
    pub t_hi: f64,
    pub threshold: f64,
    pub samples: usize,
    pub max_deviation: f64,
    /// Nondimensional time of the largest deviation.
    pub worst_t: f64,
    pub mean_deviation: f64,
    pub passed: bool,
}

impl DragReport {
    pub fn from_series(series: &DragSeries, re: f64, t_lo: f64, t_hi: f64, threshold: f64) -> Result<Self> {
        let mut dev = Vec::new();
        for r in series.records.iter().filter(|r| r.t >= t_lo && r.t <= t_hi) {
            let c = predicted_drag(re, r.t)?;
            dev.push((r.t, (r.cd - c).abs() / c));
        }
        if dev.is_empty() {
            return Err(Error::InvalidArgument(format!("no drag records in T = [{t_lo}, {t_hi}]")));
        }
        let (worst_t, max_deviation) = dev.iter().copied().fold((0.0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        let mean_deviation = dev.iter().map(|d| d.1).sum::<f64>() / dev.len() as f64;
        Ok(DragReport {
            t_lo,
            t_hi,
            threshold,
            samples: dev.len(),
            max_deviation,
            worst_t,
            mean_deviation,
            passed: max_deviation <= threshold,
        })
    }

    pub fn render(&self, cfg: &SimConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "drag law check");
        let _ = writeln!(s, "Re = {}, dt = {}, grid = {:?}", cfg.re, cfg.dt, cfg.resolution);
        let _ = writeln!(s, "window T = [{}, {}], {} samples", self.t_lo, self.t_hi, self.samples);
        let _ = writeln!(s, "max relative deviation  = {:.6} at T = {:.6}", self.max_deviation, self.worst_t);
        let _ = writeln!(s, "mean relative deviation = {:.6}", self.mean_deviation);
        let _ = writeln!(s, "threshold = {}", self.threshold);
        let _ = writeln!(s, "result: {}", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}

/// Runs a fixed-cylinder case over the validation window and compares the
/// drag with the short-time law. Writes the series and a text report.
pub fn validate_drag(cfg: &SimConfig) -> Result<DragReport> {
    match cfg.body {
        Some(b) if b.motion == Motion::Fixed || matches!(b.motion, Motion::Oscillating { alpha } if alpha == 0.0) => {}
        _ => return Err(Error::InvalidArgument("drag validation needs a fixed circular cylinder".into())),
    }
    let t_needed = cfg.validate.t_hi * cfg.diameter() / (2.0 * cfg.speed);
    let mut run_cfg = cfg.clone();
    run_cfg.t_end = cfg.t_end.max(t_needed);
    let out = run_case(&run_cfg)?;
    let v = cfg.validate;
    let report = DragReport::from_series(&out.series, cfg.re, v.t_lo, v.t_hi, v.threshold)?;
    std::fs::write(cfg.output.dir.join(REPORT_FILE), report.render(cfg))?;
    Ok(report)
}
