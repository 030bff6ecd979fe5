//! Configuration, simulation runs, validation studies and file output.

mod config;
mod convergence;
mod output;
mod run;

pub use config::{BodyConfig, ConvergenceConfig, OutputConfig, Resolution, SimConfig, ValidateConfig, OUTPUT_DIR_ENV};
pub use convergence::{convergence_study, manufactured_error, ConvergenceReport, LevelError, Manufactured};
pub use output::{read_vtk, write_vtk, DragRecord, DragSeries, Snapshot, DRAG_HEADER};
pub use run::{run_case, run_case_with, validate_drag, DragReport, RunOutput, DRAG_FILE, REPORT_FILE};
