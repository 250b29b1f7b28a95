//! Simulation models A–C, the replication runner and log-log slope fits.

mod models;
mod runner;
mod slope;

pub use models::{
    build_model, epsilon_n, ModelCWeights, ModelName, ModelSpec, KNOWN_VARIANCE, MODEL_B_EIGEN_MIN,
};
pub use runner::{
    log_spaced_grid, read_records_csv, run_experiment, run_replicate, write_records_csv,
    EmOverrides, ExperimentConfig, ExperimentRecord, Scale, CSV_HEADER, THREADS_ENV,
};
pub use slope::{fit_slope, fit_slope_with, ols, SlopeFilter, SlopeFit, SlopePoint};
