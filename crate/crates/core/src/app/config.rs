//! Flat `key = value` configuration files.
//!
//! ```text
//! # impulsively started cylinder
//! domain.x_min = -5
//! domain.x_max = 5
//! domain.y_min = -5
//! domain.y_max = 5
//! grid.nx = 256
//! grid.ny = 256
//! flow.re = 1000
//! time.dt = 1e-3
//! time.t_end = 0.1
//! body.shape = circle
//! body.radius = 0.5
//! ```

use crate::discretization::{BcPreset, OuterBc};
use crate::error::{Error, Result};
use crate::geometry::{LevelSetBody, Motion};
use crate::grid::{build_grid, GridSpec, StaggeredGrid, XSpacing};
use crate::linsolve::{KrylovSettings, Preconditioner};
use crate::timestepper::{SolverChoice, StepConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Environment variable overriding `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "CUTCELL_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    Cells { nx: usize, ny: usize },
    Spacing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyConfig {
    pub radius: f64,
    pub center: [f64; 2],
    pub motion: Motion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Steps between drag records.
    pub drag_every: usize,
    /// Steps between snapshots; `0` writes the initial snapshot only.
    pub snapshot_every: usize,
}

/// Window and threshold of the drag-law check, in nondimensional time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateConfig {
    pub t_lo: f64,
    pub t_hi: f64,
    pub threshold: f64,
}

/// Manufactured-solution refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    /// Cells along `x` on each level.
    pub levels: Vec<usize>,
    /// Zeroth-order coefficient of `alpha u - Lap u`; `0` gives Poisson.
    pub alpha: f64,
    pub min_order: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub domain: [f64; 4],
    pub resolution: Resolution,
    /// Tanh clustering of the vertical faces, `None` for uniform spacing.
    pub x_stretch: Option<f64>,
    pub re: f64,
    /// Free-stream speed, also the reference speed of the coefficients.
    pub speed: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub body: Option<BodyConfig>,
    pub bc: BcPreset,
    pub mass_correction: bool,
    pub solver: SolverChoice,
    pub krylov: KrylovSettings,
    pub rebuild_direct: bool,
    pub output: OutputConfig,
    pub validate: ValidateConfig,
    pub convergence: ConvergenceConfig,
}

const KEYS: &[&str] = &[
    "domain.x_min",
    "domain.x_max",
    "domain.y_min",
    "domain.y_max",
    "grid.nx",
    "grid.ny",
    "grid.h",
    "grid.x_stretch",
    "flow.re",
    "flow.speed",
    "time.dt",
    "time.t_end",
    "time.cfl",
    "body.shape",
    "body.radius",
    "body.center_x",
    "body.center_y",
    "body.motion",
    "body.alpha",
    "bc.preset",
    "bc.mass_correction",
    "solver.kind",
    "solver.tol",
    "solver.max_iter",
    "solver.preconditioner",
    "solver.rebuild_direct",
    "output.dir",
    "output.drag_every",
    "output.snapshot_every",
    "validate.t_lo",
    "validate.t_hi",
    "validate.threshold",
    "convergence.levels",
    "convergence.alpha",
    "convergence.min_order",
];

struct Table(BTreeMap<String, String>);

impl Table {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::invalid_value(k, "unknown key"));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::invalid_value(k, "given more than once"));
            }
        }
        Ok(Table(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|s| s.parse::<T>().map_err(|_| Error::invalid_value(key, format!("cannot parse `{s}`"))))
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::MissingKey(key.to_string()))
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid_value(key, format!("must be positive, got {x}")))
    }
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let t = Table::parse(text)?;
        let domain = [
            t.required("domain.x_min")?,
            t.required("domain.x_max")?,
            t.required("domain.y_min")?,
            t.required("domain.y_max")?,
        ];
        let resolution = match (t.get::<usize>("grid.nx")?, t.get::<usize>("grid.ny")?, t.get::<f64>("grid.h")?) {
            (Some(nx), Some(ny), None) => Resolution::Cells { nx, ny },
            (None, None, Some(h)) => Resolution::Spacing(h),
            (None, None, None) => return Err(Error::MissingKey("grid.nx".into())),
            (Some(_), None, None) => return Err(Error::MissingKey("grid.ny".into())),
            (None, Some(_), None) => return Err(Error::MissingKey("grid.nx".into())),
            _ => return Err(Error::invalid_value("grid.h", "give either grid.nx and grid.ny or grid.h")),
        };
        let body = match t.raw("body.shape").unwrap_or("none") {
            "none" => None,
            "circle" => {
                let motion = match t.raw("body.motion").unwrap_or("fixed") {
                    "fixed" => Motion::Fixed,
                    "oscillating" => Motion::Oscillating {
                        alpha: t.or("body.alpha", 0.25)?,
                    },
                    other => return Err(Error::invalid_value("body.motion", format!("expected fixed or oscillating, got `{other}`"))),
                };
                Some(BodyConfig {
                    radius: t.required("body.radius")?,
                    center: [t.or("body.center_x", 0.0)?, t.or("body.center_y", 0.0)?],
                    motion,
                })
            }
            other => return Err(Error::invalid_value("body.shape", format!("expected none or circle, got `{other}`"))),
        };
        let moving = body.is_some_and(|b| matches!(b.motion, Motion::Oscillating { alpha } if alpha != 0.0));
        let bc = match t.raw("bc.preset").unwrap_or("channel") {
            "channel" => BcPreset::Channel,
            "confined" => BcPreset::Confined,
            other => return Err(Error::invalid_value("bc.preset", format!("expected channel or confined, got `{other}`"))),
        };
        let solver = match t.raw("solver.kind") {
            None if moving => SolverChoice::Iterative,
            None | Some("direct") => SolverChoice::Direct,
            Some("iterative") => SolverChoice::Iterative,
            Some(other) => return Err(Error::invalid_value("solver.kind", format!("expected direct or iterative, got `{other}`"))),
        };
        let defaults = KrylovSettings::default();
        let preconditioner = match t.raw("solver.preconditioner").unwrap_or("ilu0") {
            "ilu0" => Preconditioner::Ilu0,
            "jacobi" => Preconditioner::Jacobi,
            other => return Err(Error::invalid_value("solver.preconditioner", format!("expected ilu0 or jacobi, got `{other}`"))),
        };
        let levels = match t.raw("convergence.levels") {
            None => vec![64, 128, 256],
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::invalid_value("convergence.levels", format!("cannot parse `{s}`")))?,
        };
        let cfg = SimConfig {
            domain,
            resolution,
            x_stretch: t.get("grid.x_stretch")?,
            re: t.required("flow.re")?,
            speed: t.or("flow.speed", 1.0)?,
            dt: t.required("time.dt")?,
            t_end: t.required("time.t_end")?,
            cfl: t.or("time.cfl", 0.5)?,
            body,
            bc,
            mass_correction: t.or("bc.mass_correction", bc == BcPreset::Channel)?,
            solver,
            krylov: KrylovSettings {
                tol: t.or("solver.tol", defaults.tol)?,
                max_iter: t.or("solver.max_iter", defaults.max_iter)?,
                preconditioner,
            },
            rebuild_direct: t.or("solver.rebuild_direct", false)?,
            output: OutputConfig {
                dir: PathBuf::from(t.raw("output.dir").unwrap_or("output")),
                drag_every: t.or("output.drag_every", 1)?,
                snapshot_every: t.or("output.snapshot_every", 0)?,
            },
            validate: ValidateConfig {
                t_lo: t.or("validate.t_lo", 0.05)?,
                t_hi: t.or("validate.t_hi", 0.2)?,
                threshold: t.or("validate.threshold", 0.10)?,
            },
            convergence: ConvergenceConfig {
                levels,
                alpha: t.or("convergence.alpha", 1.0)?,
                min_order: t.or("convergence.min_order", 1.9)?,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Replaces `output.dir` with the value of [`OUTPUT_DIR_ENV`] if set.
    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output.dir = PathBuf::from(dir);
        }
    }

    pub fn is_moving(&self) -> bool {
        self.level_set().is_some_and(|b| b.is_moving())
    }

    pub fn validate(&self) -> Result<()> {
        let [x0, x1, y0, y1] = self.domain;
        if !(x1 > x0) {
            return Err(Error::invalid_value("domain.x_max", "must exceed domain.x_min"));
        }
        if !(y1 > y0) {
            return Err(Error::invalid_value("domain.y_max", "must exceed domain.y_min"));
        }
        match self.resolution {
            Resolution::Cells { nx, ny } => {
                if nx < 2 {
                    return Err(Error::invalid_value("grid.nx", "must be at least 2"));
                }
                if ny < 2 {
                    return Err(Error::invalid_value("grid.ny", "must be at least 2"));
                }
            }
            Resolution::Spacing(h) => {
                positive("grid.h", h)?;
            }
        }
        if let Some(b) = self.x_stretch {
            positive("grid.x_stretch", b)?;
        }
        positive("flow.re", self.re)?;
        positive("flow.speed", self.speed)?;
        positive("time.dt", self.dt)?;
        positive("time.cfl", self.cfl)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid_value("time.t_end", "must be non-negative"));
        }
        if let Some(b) = &self.body {
            positive("body.radius", b.radius)?;
            if !(b.center[0].is_finite() && b.center[1].is_finite()) {
                return Err(Error::invalid_value("body.center_x", "must be finite"));
            }
            if let Motion::Oscillating { alpha } = b.motion {
                if !alpha.is_finite() {
                    return Err(Error::invalid_value("body.alpha", "must be finite"));
                }
            }
            self.level_set()
                .unwrap()
                .check_inside(self.domain, self.t_end)
                .map_err(|e| Error::invalid_value("body.center_x", e.to_string()))?;
        }
        if self.output.drag_every == 0 {
            return Err(Error::invalid_value("output.drag_every", "must be at least 1"));
        }
        let v = &self.validate;
        if !(v.t_lo > 0.0 && v.t_hi > v.t_lo) {
            return Err(Error::invalid_value("validate.t_hi", "need 0 < validate.t_lo < validate.t_hi"));
        }
        positive("validate.threshold", v.threshold)?;
        if self.convergence.levels.contains(&0) {
            return Err(Error::invalid_value("convergence.levels", "levels must be positive"));
        }
        if !(self.convergence.alpha >= 0.0) {
            return Err(Error::invalid_value("convergence.alpha", "must be non-negative"));
        }
        self.step_config().validate(self.is_moving())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let mut spec = match self.resolution {
            Resolution::Cells { nx, ny } => GridSpec::uniform(self.domain, nx, ny),
            Resolution::Spacing(h) => GridSpec::with_spacing(self.domain, h)?,
        };
        if let Some(beta) = self.x_stretch {
            spec.x_spacing = XSpacing::Tanh { beta };
        }
        Ok(spec)
    }

    pub fn grid(&self) -> Result<StaggeredGrid> {
        build_grid(&self.grid_spec()?)
    }

    pub fn level_set(&self) -> Option<LevelSetBody> {
        self.body.map(|b| LevelSetBody {
            shape: crate::geometry::Shape::Circle { radius: b.radius },
            center0: b.center,
            motion: b.motion,
        })
    }

    pub fn outer_bc(&self) -> OuterBc {
        let mut bc = match self.bc {
            BcPreset::Channel => OuterBc::channel(self.speed),
            BcPreset::Confined => OuterBc::confined(),
        };
        bc.mass_correction = self.mass_correction;
        bc
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig {
            re: self.re,
            dt: self.dt,
            bc: self.outer_bc(),
            solver: self.solver,
            krylov: self.krylov,
            cfl: self.cfl,
            rebuild_direct: self.rebuild_direct,
            ..StepConfig::new(self.re, self.dt, self.outer_bc())
        }
    }

    /// Diameter of the body, `1` without one.
    pub fn diameter(&self) -> f64 {
        self.body.map_or(1.0, |b| 2.0 * b.radius)
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Writes every setting, defaults included, in the file format.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("domain.x_min", self.domain[0].to_string());
        put("domain.x_max", self.domain[1].to_string());
        put("domain.y_min", self.domain[2].to_string());
        put("domain.y_max", self.domain[3].to_string());
        match self.resolution {
            Resolution::Cells { nx, ny } => {
                put("grid.nx", nx.to_string());
                put("grid.ny", ny.to_string());
            }
            Resolution::Spacing(h) => put("grid.h", h.to_string()),
        }
        if let Some(b) = self.x_stretch {
            put("grid.x_stretch", b.to_string());
        }
        put("flow.re", self.re.to_string());
        put("flow.speed", self.speed.to_string());
        put("time.dt", self.dt.to_string());
        put("time.t_end", self.t_end.to_string());
        put("time.cfl", self.cfl.to_string());
        match &self.body {
            None => put("body.shape", "none".into()),
            Some(b) => {
                put("body.shape", "circle".into());
                put("body.radius", b.radius.to_string());
                put("body.center_x", b.center[0].to_string());
                put("body.center_y", b.center[1].to_string());
                match b.motion {
                    Motion::Fixed => put("body.motion", "fixed".into()),
                    Motion::Oscillating { alpha } => {
                        put("body.motion", "oscillating".into());
                        put("body.alpha", alpha.to_string());
                    }
                }
            }
        }
        put(
            "bc.preset",
            match self.bc {
                BcPreset::Channel => "channel",
                BcPreset::Confined => "confined",
            }
            .into(),
        );
        put("bc.mass_correction", self.mass_correction.to_string());
        put(
            "solver.kind",
            match self.solver {
                SolverChoice::Direct => "direct",
                SolverChoice::Iterative => "iterative",
            }
            .into(),
        );
        put("solver.tol", self.krylov.tol.to_string());
        put("solver.max_iter", self.krylov.max_iter.to_string());
        put(
            "solver.preconditioner",
            match self.krylov.preconditioner {
                Preconditioner::Ilu0 => "ilu0",
                Preconditioner::Jacobi => "jacobi",
            }
            .into(),
        );
        put("solver.rebuild_direct", self.rebuild_direct.to_string());
        put("output.dir", self.output.dir.display().to_string());
        put("output.drag_every", self.output.drag_every.to_string());
        put("output.snapshot_every", self.output.snapshot_every.to_string());
        put("validate.t_lo", self.validate.t_lo.to_string());
        put("validate.t_hi", self.validate.t_hi.to_string());
        put("validate.threshold", self.validate.threshold.to_string());
        let levels: Vec<String> = self.convergence.levels.iter().map(|l| l.to_string()).collect();
        put("convergence.levels", levels.join(", "));
        put("convergence.alpha", self.convergence.alpha.to_string());
        put("convergence.min_order", self.convergence.min_order.to_string());
        s
    }
}
