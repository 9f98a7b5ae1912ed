//! Synthetic data from the linear proxy model and Monte Carlo studies of the
//! estimators on it.

mod dgp;
mod monte_carlo;
mod tables;

pub use dgp::{generate_invalid_tcp_data, generate_invalid_tcp_ocp_data, SimConfig, SimDraw};
pub use monte_carlo::{
    run_monte_carlo, McOptions, MethodSummary, MonteCarloReport, MAX_FAILED_REPLICATIONS,
};
pub use tables::{
    reproduce_table, table_grid, Scale, TableId, TableOptions, TableReport, TableRow,
};
