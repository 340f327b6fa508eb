//! Monte-Carlo relative-efficiency study: configuration, cells, grid runs
//! and the analytic kernel table.

pub mod cell;
pub mod config;
pub mod grid;
pub mod kernels;

pub use cell::{
    eval_times_from_levels, ranked_model, run_cell, CalibrationSettings, CellSettings, DesignPoint,
    EfficiencyRecord,
};
pub use config::{Config, ModelKind, FULL_B_MC, FULL_B_TRUE};
pub use grid::{design_points, run_config, run_grid, write_records, GridOptions, SCHEMA_VERSION};
pub use kernels::{kernel_table, write_kernel_table, KernelRow};
