#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod app;
pub mod discretization;
pub mod geometry;
pub mod grid;
pub mod linsolve;
pub mod forces;
pub mod timestepper;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/time-stepping.md")]
    mod time_stepping {}
    #[doc = include_str!("../../../book/src/forces.md")]
    mod forces {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
}
