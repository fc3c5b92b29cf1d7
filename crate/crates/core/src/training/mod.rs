//! Loss, optimizer, metrics, data splits and the training loop.

mod config;
mod data;
mod metrics;
mod optim;
mod train;

pub use config::{ExperimentConfig, Mode};
pub use data::{balance_classes, epoch_order, split_examples, Example, Splits};
pub use metrics::{auc, auc_counts, compute_metrics, mean_cross_entropy, Confusion, MetricsError, MetricsReport, TaskMetrics, THRESHOLD};
pub use optim::{Adam, AdamConfig, OptimError};
pub use train::{evaluate, infer_dims, predict_all, query_for, train, EpochRecord, TrainError, TrainOutcome};
