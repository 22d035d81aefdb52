//! Training protocol, metrics, synthetic data and sweeps.

mod adam;
mod config;
mod data;
mod eval;
mod schedule;
mod sweep;
mod trainer;

pub use adam::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use config::TrainConfig;
pub use data::{ball_mean_targets, gen_khop_dataset, split_dataset};
pub use eval::{evaluate, graph_mc_seed, Metric};
pub use schedule::{PlateauSchedule, ScheduleEvent};
pub use sweep::{sweep, SweepAxis, SweepRow, SweepSummary, SweepTable};
pub use trainer::{metrics_csv, train, EpochRecord, RunMetrics, TrainOutcome};
