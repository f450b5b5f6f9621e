//! Experiment driver: random group-sparse scenarios, estimator fan-out,
//! scoring and CSV output.

mod config;
mod metrics;
mod run;
mod scenario;

pub use config::ExperimentConfig;
pub use metrics::{
    connected_components, score, Components, MetricsRow, Scores, METRICS_HEADER, SUPPORT_FRACTION,
};
pub use run::{
    gnnls_residual_matched, gnnls_sweep, metrics_csv, residual_matched, run_dir, run_experiment, run_single, simulate,
    snapshot_seed, write_run, ExperimentOutput, MethodOutcome, RunOutput, Scenario, TimingRow,
};
pub use scenario::{random_asf, CLUSTER_GAP_CELLS, MAX_PLACEMENT_ATTEMPTS};
