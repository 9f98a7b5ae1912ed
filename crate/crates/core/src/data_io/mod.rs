//! Delimited-file ingestion, run configuration and report output.

mod config;
mod csv_load;
mod report;

pub use config::{config_to_string, parse_config, parse_config_str, ReproduceConfig, RunConfig};
pub use csv_load::{load_csv, write_csv, LoadOptions, Loaded, ParseMode, SchemaMap};
pub use report::{
    read_report, render_table, write_report, DataSummary, OcpRow, ReportFormat, RunReport,
};
