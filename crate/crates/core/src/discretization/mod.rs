//! Spatial operators of the cut-cell MAC scheme.

mod boundary;
mod convection;
mod field;
mod helmholtz;
mod pressure;
mod sparse;
pub mod stencil;

pub use boundary::{apply_outer_bcs, boundary_values, correct_outflow, init_outer, BcPreset, OuterBc, OuterValues};
pub use convection::{convection, convection_unknowns, vorticity, CV_FLOOR};
pub use field::{Layout, StaggeredField};
pub use helmholtz::{assemble_helmholtz, bdf_alpha, helmholtz_operator, helmholtz_separable, three_point};
pub use pressure::{
    assemble_pressure_poisson, divergence, divergence_operator, gradient, gradient_operator, pressure_separable, DivergenceOp,
    GradientOp, PressureSystem, Rows, VOLUME_FLOOR,
};
pub use stencil::{sample_component, Lines};
pub use sparse::{BoundarySource, BoundaryValues, DirichletTerm, Nullspace, SparseBuilder, SparseOperator};
