//! Monte Carlo experiments for the AR(1) design with a noisy proxy.

mod dgp;
mod experiment;
mod table;

pub use dgp::{simulate_path, DgpDraw};
pub use experiment::{
    cell_key, rep_rng, run_cell, run_grid, with_threads, CellOutcome, CellSpec, ExperimentGrid,
};
pub use table::{emit_table, write_table, RejectionRow, RejectionTable, TableFormat, TABLE_HEADER};
