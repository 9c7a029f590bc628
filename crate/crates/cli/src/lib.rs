//! Phase-transition experiment harness: (kappa, n) grids of synchronization
//! instances, solved and certified per cell, with CSV/PGM artifacts.

pub mod grid;
pub mod heatmap;

pub use grid::{run_phase_transition, CellResult, ExperimentGrid, Regime};
pub use heatmap::{emit_heatmap, write_results_csv};
