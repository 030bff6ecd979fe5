//! Velocity nodes seen as lines of faces.
//!
//! A `u` node lives on a vertical face: its line is `x = x_i` and the face
//! runs along `y`. A `v` node lives on a horizontal face, line `y = y_j`,
//! running along `x`. Along each line, the unknown of a face sits at the
//! middle of the face's fluid part, and the neighbours of a node are the next
//! node, a body point, or an outer boundary.

use super::field::Layout;
use super::sparse::BoundarySource;
use crate::geometry::{BodyState, EdgeClip, EdgeStatus, Geometry};
use crate::grid::{FieldKind, StaggeredGrid};

/// Value carrier at a position along a line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// Unknown of face `slot` on the same line.
    Node { slot: usize, pos: f64 },
    /// Body boundary point.
    Body { pos: f64 },
    /// Known outer boundary value.
    Data { pos: f64, source: BoundarySource },
    /// Mirror ghost beyond a wall at `wall`: `ghost = sign * node`.
    Mirror { wall: f64, sign: f64 },
}

impl Anchor {
    pub fn pos(&self) -> f64 {
        match *self {
            Anchor::Node { pos, .. } | Anchor::Body { pos } | Anchor::Data { pos, .. } => pos,
            Anchor::Mirror { wall, .. } => wall,
        }
    }
}

/// Linear interpolation weights over at most two anchors of one line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub line: usize,
    pub terms: [(Anchor, f64); 2],
    pub len: usize,
}

impl Bracket {
    fn one(line: usize, a: Anchor) -> Self {
        Bracket {
            line,
            terms: [(a, 1.0), (a, 0.0)],
            len: 1,
        }
    }

    pub fn terms(&self) -> &[(Anchor, f64)] {
        &self.terms[..self.len]
    }
}

/// Line view of one velocity component.
#[derive(Debug, Clone, Copy)]
pub struct Lines<'a> {
    pub kind: FieldKind,
    pub layout: Layout,
    faces: &'a [EdgeClip],
    body: Option<&'a BodyState>,
    line_coord: &'a [f64],
    slot_edges: &'a [f64],
    ny: usize,
    /// Ghost sign at the `y` walls for `u`: `1` slip, `-1` no-slip.
    wall_sign: f64,
}

impl<'a> Lines<'a> {
    pub fn new(grid: &'a StaggeredGrid, geom: &'a Geometry, kind: FieldKind, wall_sign: f64) -> Self {
        let (line_coord, slot_edges) = match kind {
            FieldKind::U => (grid.x_faces(), grid.y_faces()),
            FieldKind::V => (grid.y_faces(), grid.x_faces()),
            _ => panic!("lines exist for velocity components only"),
        };
        Lines {
            kind,
            layout: Layout::new(grid, kind),
            faces: geom.cut.faces(kind),
            body: geom.body.as_ref(),
            line_coord,
            slot_edges,
            ny: grid.ny(),
            wall_sign,
        }
    }

    /// Axis the faces run along.
    pub fn along_axis(&self) -> usize {
        match self.kind {
            FieldKind::U => 1,
            _ => 0,
        }
    }

    pub fn normal_axis(&self) -> usize {
        1 - self.along_axis()
    }

    pub fn body(&self) -> Option<&'a BodyState> {
        self.body
    }

    pub fn nlines(&self) -> usize {
        self.line_coord.len()
    }

    pub fn nslots(&self) -> usize {
        self.slot_edges.len() - 1
    }

    pub fn line_coord(&self, l: usize) -> f64 {
        self.line_coord[l]
    }

    pub fn slot_edges(&self) -> &'a [f64] {
        self.slot_edges
    }

    /// Storage `(i, j)` of face `(line, slot)`.
    pub fn ij(&self, l: usize, s: usize) -> (usize, usize) {
        match self.kind {
            FieldKind::U => (l, s),
            _ => (s, l),
        }
    }

    /// `(line, slot)` of storage `(i, j)`.
    pub fn line_slot(&self, i: usize, j: usize) -> (usize, usize) {
        match self.kind {
            FieldKind::U => (i, j),
            _ => (j, i),
        }
    }

    pub fn storage(&self, l: usize, s: usize) -> usize {
        match self.kind {
            FieldKind::U => l * self.ny + s,
            _ => s * (self.ny + 1) + l,
        }
    }

    pub fn unknown(&self, l: usize, s: usize) -> Option<usize> {
        let (i, j) = self.ij(l, s);
        self.layout.unknown(i, j)
    }

    pub fn face(&self, l: usize, s: usize) -> &'a EdgeClip {
        &self.faces[self.storage(l, s)]
    }

    pub fn point(&self, l: usize, along: f64) -> [f64; 2] {
        match self.kind {
            FieldKind::U => [self.line_coord[l], along],
            _ => [along, self.line_coord[l]],
        }
    }

    pub fn is_boundary_line(&self, l: usize) -> bool {
        l == 0 || l + 1 == self.nlines()
    }

    /// Data source of a slot on a boundary line.
    pub fn line_source(&self, l: usize, s: usize) -> BoundarySource {
        match (self.kind, l == 0) {
            (FieldKind::U, true) => BoundarySource::West(s),
            (FieldKind::U, false) => BoundarySource::East(s),
            (_, true) => BoundarySource::South(s),
            (_, false) => BoundarySource::North(s),
        }
    }

    fn end(&self, l: usize, top: bool) -> Anchor {
        let wall = if top { self.slot_edges[self.nslots()] } else { self.slot_edges[0] };
        match self.kind {
            FieldKind::U => Anchor::Mirror {
                wall,
                sign: self.wall_sign,
            },
            _ => Anchor::Data {
                pos: wall,
                source: if top { BoundarySource::East(l) } else { BoundarySource::West(l) },
            },
        }
    }

    /// Next anchor above face `s` of line `l`.
    pub fn next_up(&self, l: usize, s: usize) -> Anchor {
        let f = self.face(l, s);
        if f.solid_above() {
            return Anchor::Body { pos: f.hi };
        }
        if s + 1 == self.nslots() {
            return self.end(l, true);
        }
        let g = self.face(l, s + 1);
        if g.status == EdgeStatus::Solid {
            Anchor::Body { pos: g.a }
        } else {
            Anchor::Node {
                slot: s + 1,
                pos: g.mid(),
            }
        }
    }

    pub fn next_down(&self, l: usize, s: usize) -> Anchor {
        let f = self.face(l, s);
        if f.solid_below() {
            return Anchor::Body { pos: f.lo };
        }
        if s == 0 {
            return self.end(l, false);
        }
        let g = self.face(l, s - 1);
        if g.status == EdgeStatus::Solid {
            Anchor::Body { pos: g.b }
        } else {
            Anchor::Node {
                slot: s - 1,
                pos: g.mid(),
            }
        }
    }

    /// Interpolation of line `l` at along-coordinate `q` inside slot `s`.
    pub fn bracket(&self, l: usize, s: usize, q: f64) -> Bracket {
        if self.is_boundary_line(l) {
            return Bracket::one(
                l,
                Anchor::Data {
                    pos: q,
                    source: self.line_source(l, s),
                },
            );
        }
        let f = self.face(l, s);
        if f.status == EdgeStatus::Solid || q < f.lo || q > f.hi {
            return Bracket::one(l, Anchor::Body { pos: q });
        }
        let mid = f.mid();
        let node = Anchor::Node { slot: s, pos: mid };
        if q == mid {
            return Bracket::one(l, node);
        }
        let (lo, hi) = if q > mid { (node, self.next_up(l, s)) } else { (self.next_down(l, s), node) };
        let other = if q > mid { hi } else { lo };
        if let Anchor::Mirror { sign, .. } = other {
            if sign > 0.0 {
                return Bracket::one(l, node);
            }
        }
        let t = (q - lo.pos()) / (hi.pos() - lo.pos());
        Bracket {
            line: l,
            terms: [(lo, 1.0 - t), (hi, t)],
            len: 2,
        }
    }

    /// Value of `field` (grid storage) carried by `a` on line `l`.
    pub fn anchor_value(&self, l: usize, a: &Anchor, field: &[f64], outer: &dyn Fn(BoundarySource) -> f64) -> f64 {
        match *a {
            Anchor::Node { slot, .. } => field[self.storage(l, slot)],
            Anchor::Body { .. } => self.body_value(),
            Anchor::Data { source, .. } => outer(source),
            Anchor::Mirror { .. } => 0.0,
        }
    }

    /// Body velocity component carried by this field.
    pub fn body_value(&self) -> f64 {
        let v = self.body.map_or([0.0, 0.0], |b| b.velocity);
        match self.kind {
            FieldKind::U => v[0],
            _ => v[1],
        }
    }

    /// Crossing of the body between lines `l` and `l2` at along-coordinate `q`,
    /// if the point of `l2` lies in the solid.
    pub fn crossing(&self, l: usize, l2: usize, q: f64) -> Option<f64> {
        let body = self.body?;
        if body.phi(self.point(l2, q)) >= 0.0 {
            return None;
        }
        let (a, b) = (self.line_coord[l], self.line_coord[l2]);
        Some(body.root_on_segment(self.normal_axis(), q, a.min(b), a.max(b)))
    }

    /// Point of the normal axis at `normal` and along coordinate `q`.
    pub fn normal_point(&self, normal: f64, q: f64) -> [f64; 2] {
        match self.kind {
            FieldKind::U => [normal, q],
            _ => [q, normal],
        }
    }
}

/// Value of a velocity component at an arbitrary point, interpolated along
/// the node lines with body and boundary anchors, then linearly across lines.
/// Points inside the body return the body velocity.
pub fn sample_component(lines: &Lines, field: &[f64], outer: &dyn Fn(BoundarySource) -> f64, p: [f64; 2]) -> f64 {
    let (na, fa) = (lines.normal_axis(), lines.along_axis());
    let (x, q) = (p[na], p[fa]);
    let ub = lines.body_value();
    let solid = |l: usize| lines.body().is_some_and(|b| b.phi(lines.point(l, q)) < 0.0);
    let nl = lines.nlines();
    let l = lines.line_coord.partition_point(|&c| c <= x).clamp(1, nl - 1) - 1;
    let edges = lines.slot_edges();
    let s = edges.partition_point(|&c| c <= q).clamp(1, lines.nslots()) - 1;
    if lines.body().is_some_and(|b| b.phi(p) < 0.0) {
        return ub;
    }
    let value = |l: usize| {
        let br = lines.bracket(l, s, q);
        br.terms().iter().map(|(a, w)| w * lines.anchor_value(l, a, field, outer)).sum::<f64>()
    };
    let (x0, x1) = (lines.line_coord(l), lines.line_coord(l + 1));
    let (lo, vlo) = if solid(l) {
        (lines.crossing(l + 1, l, q).unwrap_or(x0), ub)
    } else {
        (x0, value(l))
    };
    let (hi, vhi) = if solid(l + 1) {
        (lines.crossing(l, l + 1, q).unwrap_or(x1), ub)
    } else {
        (x1, value(l + 1))
    };
    if hi <= lo {
        return vlo;
    }
    let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
    (1.0 - t) * vlo + t * vhi
}
