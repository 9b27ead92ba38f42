//! Scenario configuration, seeded experiment runners and result files.

mod config;
mod experiments;
mod output;
pub mod scenario;

pub use config::{
    dbm_to_watts, watts_to_dbm, AasrConfig, AoConfig, ChannelConfig, GeometryConfig, RankConfig,
    ScenarioConfig, SumrateConfig, SystemConfig,
};
pub use experiments::{
    first_decrease, run_aasr_vs_rho, run_ao_trace, run_rank_analysis, run_sumrate_vs_elements,
    sumrate_schemes, Experiment, CROSS_SOLVER_TOL, MONOTONICITY_TOL,
};
pub use output::{format_g12, mean_and_stderr, ExperimentResult, Metadata, ResultRow, CSV_HEADER};
