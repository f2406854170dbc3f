//! Experiment configs, sweeps and result files.

mod config;
mod pipeline;
mod report;
mod setting;

pub use config::{DataSource, ExperimentConfig, InlpSettings, SplitSizes};
pub use pipeline::{
    debias, fit, log_space, prepare_data, run_experiment, run_sweep, Debias, Splits, SweepGrid,
    TrainedModel,
};
pub use report::{
    emit_frontier, emit_table, frontier_of, frontier_to_csv, read_rows_csv, rows_to_csv, table_of,
    table_to_csv, write_rows_csv, EvalSplit, ResultRow, TableEntry, FRONTIER_HEADER, ROWS_HEADER,
    TABLE_HEADER,
};
pub use setting::Setting;
