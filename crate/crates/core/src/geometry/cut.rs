use super::body::{BodyState, LevelSetBody};
use super::clip::{clip_rect, edge_clip, snap, CellKind, EdgeClip, EdgeStatus, Segment};
use crate::error::{Error, Result};
use crate::grid::{FieldKind, StaggeredGrid};

/// Label of a staggered velocity unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Fluid,
    Solid,
    /// On a cut face; the unknown sits at the middle of the fluid part.
    Relocated,
}

impl From<EdgeStatus> for NodeKind {
    fn from(s: EdgeStatus) -> Self {
        match s {
            EdgeStatus::Fluid => NodeKind::Fluid,
            EdgeStatus::Solid => NodeKind::Solid,
            EdgeStatus::Cut => NodeKind::Relocated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMask {
    pub cells: Vec<CellKind>,
    pub u_nodes: Vec<NodeKind>,
    pub v_nodes: Vec<NodeKind>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaskCounts {
    pub fluid: usize,
    pub solid: usize,
    pub cut: usize,
}

impl CellMask {
    pub fn cell_counts(&self) -> MaskCounts {
        let mut c = MaskCounts::default();
        for k in &self.cells {
            match k {
                CellKind::Fluid => c.fluid += 1,
                CellKind::Solid => c.solid += 1,
                CellKind::Cut => c.cut += 1,
            }
        }
        c
    }

    /// Counts for a velocity component, with `cut` holding relocated nodes.
    pub fn node_counts(&self, kind: FieldKind) -> MaskCounts {
        let mut c = MaskCounts::default();
        for k in self.nodes(kind) {
            match k {
                NodeKind::Fluid => c.fluid += 1,
                NodeKind::Solid => c.solid += 1,
                NodeKind::Relocated => c.cut += 1,
            }
        }
        c
    }

    pub fn nodes(&self, kind: FieldKind) -> &[NodeKind] {
        match kind {
            FieldKind::U => &self.u_nodes,
            FieldKind::V => &self.v_nodes,
            _ => panic!("node labels exist only for velocity components"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutCell {
    pub i: usize,
    pub j: usize,
    /// Fluid area of the cell.
    pub area: f64,
    pub segments: Vec<Segment>,
}

/// Apertures, relocated positions and boundary segments.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCellGeometry {
    /// Snapped levelset at cell corners.
    pub corner_phi: Vec<f64>,
    /// Vertical faces, `(nx+1) x ny`, intervals along `y`.
    pub u_faces: Vec<EdgeClip>,
    /// Horizontal faces, `nx x (ny+1)`, intervals along `x`.
    pub v_faces: Vec<EdgeClip>,
    pub cut_cells: Vec<CutCell>,
    cut_index: Vec<u32>,
    snap_tol: f64,
}

impl CutCellGeometry {
    pub fn cut_cell(&self, ny: usize, i: usize, j: usize) -> Option<&CutCell> {
        match self.cut_index[i * ny + j] {
            u32::MAX => None,
            k => Some(&self.cut_cells[k as usize]),
        }
    }

    pub fn faces(&self, kind: FieldKind) -> &[EdgeClip] {
        match kind {
            FieldKind::U => &self.u_faces,
            FieldKind::V => &self.v_faces,
            _ => panic!("faces exist only for velocity components"),
        }
    }

    pub fn snap_tol(&self) -> f64 {
        self.snap_tol
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.cut_cells.iter().flat_map(|c| c.segments.iter())
    }

    pub fn perimeter(&self) -> f64 {
        self.segments().map(|s| s.len).sum()
    }
}

fn snapped_corners(grid: &StaggeredGrid, body: Option<&BodyState>) -> (Vec<f64>, f64) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let tol = 1e-6 * grid.min_spacing();
    let mut phi = vec![f64::INFINITY; (nx + 1) * (ny + 1)];
    if let Some(b) = body {
        for i in 0..=nx {
            for j in 0..=ny {
                let p = [grid.x_faces()[i], grid.y_faces()[j]];
                phi[i * (ny + 1) + j] = snap(b.phi(p), tol);
            }
        }
    }
    (phi, tol)
}

fn check_clear_of_boundary(grid: &StaggeredGrid, body: &BodyState) -> Result<()> {
    let [x0, x1, y0, y1] = grid.bounds();
    let [cx, cy] = body.center;
    let r = body.radius;
    let inside = cx > x0 && cx < x1 && cy > y0 && cy < y1;
    let clear = if inside {
        (cx - x0).min(x1 - cx).min(cy - y0).min(y1 - cy) > r
    } else {
        // entirely outside is allowed
        let dx = (x0 - cx).max(0.0).max(cx - x1);
        let dy = (y0 - cy).max(0.0).max(cy - y1);
        dx.hypot(dy) > r
    };
    if clear {
        Ok(())
    } else {
        Err(Error::InvalidBody("body touches the outer boundary".into()))
    }
}

fn face_clips(grid: &StaggeredGrid, body: Option<&BodyState>, phi: &[f64]) -> (Vec<EdgeClip>, Vec<EdgeClip>) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let (xf, yf) = (grid.x_faces(), grid.y_faces());
    let c = |i: usize, j: usize| phi[i * (ny + 1) + j];
    let mut u = Vec::with_capacity((nx + 1) * ny);
    for i in 0..=nx {
        for j in 0..ny {
            u.push(edge_clip(body, 1, xf[i], yf[j], yf[j + 1], c(i, j), c(i, j + 1)));
        }
    }
    let mut v = Vec::with_capacity(nx * (ny + 1));
    for i in 0..nx {
        for j in 0..=ny {
            v.push(edge_clip(body, 0, yf[j], xf[i], xf[i + 1], c(i, j), c(i + 1, j)));
        }
    }
    (u, v)
}

/// Labels cells and velocity nodes of `grid` for `body` at time `t`.
pub fn classify(grid: &StaggeredGrid, body: Option<&LevelSetBody>, t: f64) -> Result<CellMask> {
    Ok(Geometry::build(grid, body, t)?.mask)
}

/// Cut-cell data consistent with [`classify`] for the same inputs.
pub fn cut_geometry(grid: &StaggeredGrid, body: Option<&LevelSetBody>, t: f64) -> Result<CutCellGeometry> {
    Ok(Geometry::build(grid, body, t)?.cut)
}

/// Everything the discretization needs to know about the body at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub body: Option<BodyState>,
    pub mask: CellMask,
    pub cut: CutCellGeometry,
}

impl Geometry {
    /// Geometry of the unobstructed domain.
    pub fn empty(grid: &StaggeredGrid) -> Self {
        Self::build_state(grid, None).expect("empty geometry cannot fail")
    }

    pub fn build(grid: &StaggeredGrid, body: Option<&LevelSetBody>, t: f64) -> Result<Self> {
        Self::build_state(grid, body.map(|b| b.at(t)).as_ref())
    }

    pub fn build_state(grid: &StaggeredGrid, body: Option<&BodyState>, ) -> Result<Self> {
        if let Some(b) = body {
            check_clear_of_boundary(grid, b)?;
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let (phi, snap_tol) = snapped_corners(grid, body);
        let (u_faces, v_faces) = face_clips(grid, body, &phi);
        let mut cells = vec![CellKind::Fluid; nx * ny];
        let mut cut_index = vec![u32::MAX; nx * ny];
        let mut cut_cells = Vec::new();
        if body.is_some() {
            let (xf, yf) = (grid.x_faces(), grid.y_faces());
            let c = |i: usize, j: usize| phi[i * (ny + 1) + j];
            for i in 0..nx {
                for j in 0..ny {
                    let corners = [c(i, j), c(i + 1, j), c(i + 1, j + 1), c(i, j + 1)];
                    if corners.iter().all(|&p| p > 0.0) {
                        continue;
                    }
                    let rect = [xf[i], xf[i + 1], yf[j], yf[j + 1]];
                    let clip = clip_rect(body, rect, corners);
                    cells[i * ny + j] = clip.kind;
                    if clip.kind == CellKind::Cut {
                        cut_index[i * ny + j] = cut_cells.len() as u32;
                        cut_cells.push(CutCell {
                            i,
                            j,
                            area: clip.area,
                            segments: clip.chords,
                        });
                    }
                }
            }
        }
        let u_nodes = u_faces.iter().map(|f| f.status.into()).collect();
        let v_nodes = v_faces.iter().map(|f| f.status.into()).collect();
        Ok(Geometry {
            body: body.copied(),
            mask: CellMask { cells, u_nodes, v_nodes },
            cut: CutCellGeometry {
                corner_phi: phi,
                u_faces,
                v_faces,
                cut_cells,
                cut_index,
                snap_tol,
            },
        })
    }

    pub fn has_body(&self) -> bool {
        self.body.is_some()
    }

    pub fn body_velocity(&self) -> [f64; 2] {
        self.body.map_or([0.0, 0.0], |b| b.velocity)
    }

    pub fn cell(&self, ny: usize, i: usize, j: usize) -> CellKind {
        self.mask.cells[i * ny + j]
    }

    /// Fluid area of a cell.
    pub fn fluid_area(&self, grid: &StaggeredGrid, i: usize, j: usize) -> f64 {
        let ny = grid.ny();
        match self.mask.cells[i * ny + j] {
            CellKind::Fluid => grid.cell_area(i, j),
            CellKind::Solid => 0.0,
            CellKind::Cut => self.cut.cut_cell(ny, i, j).unwrap().area,
        }
    }

    /// Position of a velocity unknown, relocated to its fluid midpoint on cut faces.
    pub fn node_position(&self, grid: &StaggeredGrid, kind: FieldKind, i: usize, j: usize) -> [f64; 2] {
        let k = grid.index(kind, i, j);
        match kind {
            FieldKind::U => [grid.x_faces()[i], self.cut.u_faces[k].mid()],
            FieldKind::V => [self.cut.v_faces[k].mid(), grid.y_faces()[j]],
            _ => grid.position(kind, i, j),
        }
    }

    /// Snapped levelset at a cell corner (`+inf` without a body).
    pub fn corner_phi(&self, grid: &StaggeredGrid, i: usize, j: usize) -> f64 {
        self.cut.corner_phi[i * (grid.ny() + 1) + j]
    }

    /// Levelset at an arbitrary point (`+inf` without a body).
    pub fn phi(&self, p: [f64; 2]) -> f64 {
        self.body.map_or(f64::INFINITY, |b| b.phi(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};

    fn circle(r: f64) -> LevelSetBody {
        LevelSetBody::circle([0.0, 0.0], r).unwrap()
    }

    #[test]
    fn corner_cell_is_cut() {
        let g = build_grid(&GridSpec::uniform([-2.0, 2.0, -2.0, 2.0], 4, 4)).unwrap();
        let m = classify(&g, Some(&circle(0.5)), 0.0).unwrap();
        // cell (0,1)x(0,1) has indices (2,2)
        assert_eq!(m.cells[2 * 4 + 2], CellKind::Cut);
        assert_eq!(m.cell_counts().cut, 4);
    }

    #[test]
    fn no_body_is_all_fluid() {
        let g = build_grid(&GridSpec::uniform([-2.0, 2.0, -2.0, 2.0], 8, 8)).unwrap();
        let m = classify(&g, None, 0.0).unwrap();
        assert_eq!(m.cell_counts(), MaskCounts { fluid: 64, solid: 0, cut: 0 });
        assert!(m.u_nodes.iter().all(|&k| k == NodeKind::Fluid));
    }

    #[test]
    fn cut_count_matches_brute_force() {
        let g = build_grid(&GridSpec::uniform([-2.0, 2.0, -2.0, 2.0], 256, 256)).unwrap();
        let body = circle(0.5);
        let m = classify(&g, Some(&body), 0.0).unwrap();
        let mut brute = 0;
        for i in 0..256 {
            for j in 0..256 {
                let mut pos = false;
                let mut neg = false;
                for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    let p = body.levelset([g.x_faces()[a], g.y_faces()[b]], 0.0);
                    pos |= p > 0.0;
                    neg |= p < 0.0;
                }
                brute += (pos && neg) as usize;
            }
        }
        assert_eq!(m.cell_counts().cut, brute);
    }

    #[test]
    fn touching_boundary_is_an_error() {
        let g = build_grid(&GridSpec::uniform([-1.0, 1.0, -1.0, 1.0], 8, 8)).unwrap();
        let b = LevelSetBody::circle([0.6, 0.0], 0.5).unwrap();
        assert!(classify(&g, Some(&b), 0.0).is_err());
        let outside = LevelSetBody::circle([5.0, 0.0], 0.5).unwrap();
        assert_eq!(classify(&g, Some(&outside), 0.0).unwrap().cell_counts().cut, 0);
    }

    #[test]
    fn perimeter_close_to_exact() {
        let g = build_grid(&GridSpec::uniform([-1.0, 1.0, -1.0, 1.0], 128, 128)).unwrap();
        let c = cut_geometry(&g, Some(&circle(0.5)), 0.0).unwrap();
        let p = c.perimeter();
        assert!((p - std::f64::consts::PI).abs() < 0.02 * std::f64::consts::PI);
    }
}
