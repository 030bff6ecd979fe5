//! Linear solvers: tridiagonal kernels, the transform-based fast solver,
//! the capacitance-matrix correction and a Krylov fallback.

mod banded;
mod capacitance;
mod dense;
mod fast;
mod krylov;
mod tridiag;

pub use banded::BandedLu;
pub use capacitance::CapacitanceSolver;
pub use dense::DenseLu;
pub use fast::{FastPlan, SeparableOperator, TridiagKernel, YTransform};
pub use krylov::{krylov_solve, KrylovSettings, Preconditioner};
pub use tridiag::{dac_solve, thomas_solve, TridiagonalSystem};
