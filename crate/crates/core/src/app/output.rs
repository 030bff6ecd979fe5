//! Drag series CSV and legacy VTK snapshots.

use crate::discretization::vorticity;
use crate::error::{Error, Result};
use crate::geometry::{CellKind, Geometry};
use crate::grid::StaggeredGrid;
use std::fmt::Write as _;
use std::path::Path;

pub const DRAG_HEADER: &str = "T,Cd,Cl,Cd_p,Cd_v";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragRecord {
    /// Nondimensional time.
    pub t: f64,
    pub cd: f64,
    pub cl: f64,
    pub cd_pressure: f64,
    pub cd_viscous: f64,
    /// Wall-clock seconds spent on the step.
    pub wall: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DragSeries {
    pub records: Vec<DragRecord>,
}

impl DragSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: DragRecord) {
        debug_assert!(self.records.last().is_none_or(|l| r.t > l.t));
        self.records.push(r);
    }

    /// CSV text with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(DRAG_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.t, r.cd, r.cl, r.cd_pressure, r.cd_viscous
            );
        }
        s
    }

    /// Parses [`DragSeries::to_csv`] output; wall-clock times are not stored
    /// and read back as zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(DRAG_HEADER) {
            return Err(Error::InvalidArgument("drag CSV header mismatch".into()));
        }
        let mut out = DragSeries::default();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("drag CSV line {}: {e}", n + 2)))?;
            if v.len() != 5 {
                return Err(Error::InvalidArgument(format!("drag CSV line {}: expected 5 columns", n + 2)));
            }
            out.records.push(DragRecord {
                t: v[0],
                cd: v[1],
                cl: v[2],
                cd_pressure: v[3],
                cd_viscous: v[4],
                wall: 0.0,
            });
        }
        Ok(out)
    }
}

/// Corner values of a snapshot, `x` fastest as in the VTK point order.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Flow fields at the cell corners: velocities averaged from the two
    /// adjacent faces, pressure from the adjacent non-solid cells.
    pub fn from_state(grid: &StaggeredGrid, geom: &Geometry, u: &[f64], v: &[f64], p: &[f64]) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let corner = |i: usize, j: usize| j * (nx + 1) + i;
        let n = (nx + 1) * (ny + 1);
        let (mut cu, mut cv, mut cp, mut om, mut phi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let w = vorticity(grid, geom, u, v);
        for i in 0..=nx {
            for j in 0..=ny {
                let k = corner(i, j);
                let (jl, jh) = (j.saturating_sub(1), j.min(ny - 1));
                cu[k] = 0.5 * (u[i * ny + jl] + u[i * ny + jh]);
                let (il, ih) = (i.saturating_sub(1), i.min(nx - 1));
                cv[k] = 0.5 * (v[il * (ny + 1) + j] + v[ih * (ny + 1) + j]);
                let (mut s, mut c) = (0.0, 0);
                for a in [il, ih] {
                    for b in [jl, jh] {
                        if geom.cell(ny, a, b) != CellKind::Solid {
                            s += p[a * ny + b];
                            c += 1;
                        }
                    }
                }
                cp[k] = if c > 0 { s / c as f64 } else { 0.0 };
                om[k] = w[i * (ny + 1) + j];
                let ph = geom.corner_phi(grid, i, j);
                phi[k] = if ph.is_finite() { ph } else { f64::MAX };
            }
        }
        Snapshot {
            nx: nx + 1,
            ny: ny + 1,
            fields: vec![
                ("u".into(), cu),
                ("v".into(), cv),
                ("p".into(), cp),
                ("vorticity".into(), om),
                ("levelset".into(), phi),
            ],
        }
    }
}

/// Legacy ASCII VTK rectilinear grid with one scalar per field.
pub fn write_vtk(path: &Path, grid: &StaggeredGrid, snap: &Snapshot, title: &str) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET RECTILINEAR_GRID");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", snap.nx, snap.ny);
    for (name, c) in [("X", grid.x_faces()), ("Y", grid.y_faces())] {
        let _ = writeln!(s, "{name}_COORDINATES {} double", c.len());
        let vals: Vec<String> = c.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", vals.join(" "));
    }
    let _ = writeln!(s, "Z_COORDINATES 1 double\n0");
    let _ = writeln!(s, "POINT_DATA {}", snap.nx * snap.ny);
    for (name, vals) in &snap.fields {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for row in vals.chunks(snap.nx) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Reads the scalar fields back from [`write_vtk`] output.
pub fn read_vtk(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path)?;
    let bad = |m: &str| Error::InvalidArgument(format!("{}: {m}", path.display()));
    let mut tokens = text.lines().skip(2).flat_map(str::split_whitespace);
    let mut dims = None;
    let mut fields = Vec::new();
    let mut npts = 0;
    while let Some(t) = tokens.next() {
        match t {
            "DIMENSIONS" => {
                let mut d = [0usize; 3];
                for x in &mut d {
                    *x = tokens.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad DIMENSIONS"))?;
                }
                dims = Some((d[0], d[1]));
            }
            "X_COORDINATES" | "Y_COORDINATES" | "Z_COORDINATES" => {
                let n: usize = tokens.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad coordinates"))?;
                tokens.next();
                for _ in 0..n {
                    tokens.next();
                }
            }
            "POINT_DATA" => {
                npts = tokens.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad POINT_DATA"))?;
            }
            "SCALARS" => {
                let name = tokens.next().ok_or_else(|| bad("bad SCALARS"))?.to_string();
                for _ in 0..4 {
                    tokens.next();
                }
                let vals: Vec<f64> = (0..npts)
                    .map(|_| tokens.next().and_then(|s| s.parse().ok()))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad("truncated scalars"))?;
                fields.push((name, vals));
            }
            _ => {}
        }
    }
    let (nx, ny) = dims.ok_or_else(|| bad("missing DIMENSIONS"))?;
    Ok(Snapshot { nx, ny, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, FieldKind, GridSpec};

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = DragSeries::default();
        for k in 1..20 {
            let x = k as f64 / 7.0;
            s.push(DragRecord {
                t: x,
                cd: 1.0 / x,
                cl: -x.sin() * 1e-9,
                cd_pressure: 0.3 / x,
                cd_viscous: 0.7 / x,
                wall: 0.1,
            });
        }
        let back = DragSeries::from_csv(&s.to_csv()).unwrap();
        for (a, b) in s.records.iter().zip(&back.records) {
            assert_eq!((a.t, a.cd, a.cl, a.cd_pressure, a.cd_viscous), (b.t, b.cd, b.cl, b.cd_pressure, b.cd_viscous));
        }
        assert!(s.to_csv().starts_with("T,Cd,Cl,Cd_p,Cd_v\n"));
    }

    #[test]
    fn vtk_round_trip() {
        let g = build_grid(&GridSpec::uniform([0.0, 1.0, 0.0, 2.0], 4, 6)).unwrap();
        let geom = Geometry::empty(&g);
        let u: Vec<f64> = g.field_positions(FieldKind::U).iter().map(|p| p[1]).collect();
        let v: Vec<f64> = g.field_positions(FieldKind::V).iter().map(|p| p[0]).collect();
        let p: Vec<f64> = g.field_positions(FieldKind::P).iter().map(|p| p[0] + p[1]).collect();
        let snap = Snapshot::from_state(&g, &geom, &u, &v, &p);
        let dir = std::env::temp_dir().join(format!("cutcell-vtk-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.vtk");
        write_vtk(&path, &g, &snap, "test").unwrap();
        let back = read_vtk(&path).unwrap();
        assert_eq!(back, snap);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\ntest\nASCII\nDATASET RECTILINEAR_GRID\nDIMENSIONS 5 7 1\n"));
        // interior corner (x = 0.5, y = 1): u = y, v = x
        let k = 3 * 5 + 2;
        assert!((snap.field("u").unwrap()[k] - 1.0).abs() < 1e-14);
        assert!((snap.field("v").unwrap()[k] - 0.5).abs() < 1e-14);
        assert!((snap.field("p").unwrap()[k] - 1.5).abs() < 1e-14);
        std::fs::remove_dir_all(&dir).ok();
    }
}
