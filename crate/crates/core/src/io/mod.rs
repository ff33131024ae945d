//! Panel CSV ingestion and run configuration files.

pub mod config;
mod csv_panel;

pub use config::{PanelLossKind, RunConfig, WeightKind, CONFIG_KEYS};
pub use csv_panel::{panel_from_columns, read_panel, read_panel_path, CsvColumns, DATE_COLUMN, REQUIRED_COLUMNS};
