//! Levelset body, cell classification and cut-cell geometry.
//!
//! Corner levelset values within `1e-6` of the smallest mesh spacing are
//! snapped to zero before classification, so no face ends up with a
//! vanishing fluid or solid fraction.

mod body;
mod clip;
mod cut;

pub use body::{BodyState, LevelSetBody, Motion, Shape};
pub use clip::{clip_rect, edge_clip, snap, CellKind, EdgeClip, EdgeStatus, RectClip, Segment};
pub use cut::{classify, cut_geometry, CellMask, CutCell, CutCellGeometry, Geometry, MaskCounts, NodeKind};
