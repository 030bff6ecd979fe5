//! Clipping of axis-aligned edges and rectangles against the levelset.

use super::body::BodyState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeStatus {
    Fluid,
    Solid,
    Cut,
}

/// Fluid part of an axis-aligned edge, as an interval of the coordinate
/// running along the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeClip {
    pub status: EdgeStatus,
    /// Start of the edge.
    pub a: f64,
    /// End of the edge.
    pub b: f64,
    /// Fluid interval `[lo, hi]`; empty (`lo == hi`) for solid edges.
    pub lo: f64,
    pub hi: f64,
}

impl EdgeClip {
    pub fn fluid(a: f64, b: f64) -> Self {
        EdgeClip {
            status: EdgeStatus::Fluid,
            a,
            b,
            lo: a,
            hi: b,
        }
    }

    /// Fluid fraction of the edge, in `[0, 1]`.
    pub fn aperture(&self) -> f64 {
        match self.status {
            EdgeStatus::Fluid => 1.0,
            EdgeStatus::Solid => 0.0,
            EdgeStatus::Cut => ((self.hi - self.lo) / (self.b - self.a)).clamp(0.0, 1.0),
        }
    }

    /// Midpoint of the fluid interval.
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn fluid_len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Boundary intersection of a cut edge.
    pub fn root(&self) -> Option<f64> {
        match self.status {
            EdgeStatus::Cut => Some(if self.lo > self.a { self.lo } else { self.hi }),
            _ => None,
        }
    }

    /// Whether the solid part of a cut edge lies at its low end.
    pub fn solid_below(&self) -> bool {
        self.status == EdgeStatus::Cut && self.lo > self.a
    }

    pub fn solid_above(&self) -> bool {
        self.status == EdgeStatus::Cut && self.hi < self.b
    }

    pub fn contains(&self, s: f64) -> bool {
        self.status != EdgeStatus::Solid && s >= self.lo && s <= self.hi
    }
}

/// Zeroes levelset values within `tol` of the interface.
pub fn snap(phi: f64, tol: f64) -> f64 {
    if phi.abs() < tol {
        0.0
    } else {
        phi
    }
}

/// Clips the edge `{coord[axis] in [a, b], coord[1-axis] = fixed}` with
/// (snapped) endpoint levelset values `pa`, `pb`.
pub fn edge_clip(
    body: Option<&BodyState>,
    axis: usize,
    fixed: f64,
    a: f64,
    b: f64,
    pa: f64,
    pb: f64,
) -> EdgeClip {
    let solid = EdgeClip {
        status: EdgeStatus::Solid,
        a,
        b,
        lo: a,
        hi: a,
    };
    if pa >= 0.0 && pb >= 0.0 {
        if pa == 0.0 && pb == 0.0 {
            if let Some(body) = body {
                let mut m = [0.0; 2];
                m[axis] = 0.5 * (a + b);
                m[1 - axis] = fixed;
                if body.phi(m) < 0.0 {
                    return solid;
                }
            }
        }
        return EdgeClip::fluid(a, b);
    }
    if pa <= 0.0 && pb <= 0.0 {
        return solid;
    }
    let body = body.expect("sign change without a body");
    let r = body.root_on_segment(axis, fixed, a, b);
    let (lo, hi) = if pa < 0.0 { (r, b) } else { (a, r) };
    EdgeClip {
        status: EdgeStatus::Cut,
        a,
        b,
        lo,
        hi,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Fluid,
    Solid,
    Cut,
}

/// Straight piece of the discrete body boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub mid: [f64; 2],
    pub len: f64,
    /// Unit normal pointing into the fluid.
    pub normal: [f64; 2],
}

impl Segment {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let normal = if len > 0.0 {
            [-d[1] / len, d[0] / len]
        } else {
            [0.0, 0.0]
        };
        Segment {
            a,
            b,
            mid: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
            len,
            normal,
        }
    }
}

/// Fluid part of an axis-aligned rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct RectClip {
    pub kind: CellKind,
    pub area: f64,
    /// Bottom, right, top, left edges, each parameterized by increasing coordinate.
    pub edges: [EdgeClip; 4],
    /// Counter-clockwise fluid polygon (only for cut rectangles).
    pub polygon: Vec<[f64; 2]>,
    /// Body chords, oriented so that the fluid lies to their left.
    pub chords: Vec<Segment>,
}

/// Clips `[x0, x1] x [y0, y1]` given snapped levelset values at its corners
/// (bottom-left, bottom-right, top-right, top-left).
pub fn clip_rect(body: Option<&BodyState>, rect: [f64; 4], phi: [f64; 4]) -> RectClip {
    let [x0, x1, y0, y1] = rect;
    let edges = [
        edge_clip(body, 0, y0, x0, x1, phi[0], phi[1]),
        edge_clip(body, 1, x1, y0, y1, phi[1], phi[2]),
        edge_clip(body, 0, y1, x0, x1, phi[3], phi[2]),
        edge_clip(body, 1, x0, y0, y1, phi[0], phi[3]),
    ];
    let full = (x1 - x0) * (y1 - y0);
    let any_pos = phi.iter().any(|&p| p > 0.0);
    let any_neg = phi.iter().any(|&p| p < 0.0);
    let any_solid_edge = edges.iter().any(|e| e.status == EdgeStatus::Solid);
    if !any_pos {
        return RectClip {
            kind: CellKind::Solid,
            area: 0.0,
            edges,
            polygon: Vec::new(),
            chords: Vec::new(),
        };
    }
    if !any_neg && !any_solid_edge {
        return RectClip {
            kind: CellKind::Fluid,
            area: full,
            edges,
            polygon: Vec::new(),
            chords: Vec::new(),
        };
    }

    let corners = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let start = phi.iter().position(|&p| p > 0.0).unwrap();
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(8);
    let mut gaps: Vec<bool> = Vec::with_capacity(8);
    let mut gap = false;
    for m in 0..4 {
        let ka = (start + m) % 4;
        if phi[ka] >= 0.0 {
            pts.push(corners[ka]);
            gaps.push(gap);
            gap = false;
        } else {
            gap = true;
        }
        let e = &edges[ka];
        match e.status {
            EdgeStatus::Cut => {
                let r = e.root().unwrap();
                let p = if ka % 2 == 0 { [r, e_fixed(ka, rect)] } else { [e_fixed(ka, rect), r] };
                if phi[ka] > 0.0 {
                    pts.push(p);
                    gaps.push(false);
                    gap = true;
                } else {
                    pts.push(p);
                    gaps.push(true);
                    gap = false;
                }
            }
            EdgeStatus::Solid => gap = true,
            EdgeStatus::Fluid => {}
        }
    }

    let mut area2 = 0.0;
    for k in 0..pts.len() {
        let p = pts[k];
        let q = pts[(k + 1) % pts.len()];
        area2 += p[0] * q[1] - q[0] * p[1];
    }
    let tiny = 1e-14 * (x1 - x0).max(y1 - y0);
    let chords = (1..pts.len())
        .filter(|&k| gaps[k])
        .map(|k| Segment::new(pts[k - 1], pts[k]))
        .filter(|s| s.len > tiny)
        .collect();
    RectClip {
        kind: CellKind::Cut,
        area: (0.5 * area2).clamp(0.0, full),
        edges,
        polygon: pts,
        chords,
    }
}

fn e_fixed(edge: usize, rect: [f64; 4]) -> f64 {
    match edge {
        0 => rect[2],
        1 => rect[1],
        2 => rect[3],
        _ => rect[0],
    }
}
