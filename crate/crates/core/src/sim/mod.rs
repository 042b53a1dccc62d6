//! Three-timescale simulator: per-slot service, cache updates every `T₂`
//! slots and re-clustering every `T₁` slots.

mod config;
mod engine;
mod metrics;
mod sweep;

pub use config::{
    CachingConfig, ClusteringConfig, ContentConfig, Feedback, InterferenceModel, LearningConfig, NetworkConfig,
    RunConfig, Scheme, SimConfig,
};
pub use engine::{remap_learner, run_replication, run_replication_with, with_scheme, Diagnostics, Event};
pub use metrics::{summarize, EpochMetrics, MetricsRecord, Summary};
pub use sweep::{run_seeds, sweep, write_results_csv, SweepRow, RESULT_COLUMNS};
