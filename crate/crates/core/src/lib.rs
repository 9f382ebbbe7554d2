//! Predictive process monitoring on event logs.
//!
//! The pipeline runs: [`eventlog`] (parse, validate, chronological split) →
//! [`features`] (boundary events, time features, padded prefixes or n-gram
//! windows) → [`models`] (three Transformer and two LSTM architectures on
//! top of `ppm-nn`) → [`training`] (uncertainty-weighted multi-task
//! training, grid search) → [`evaluation`] (F1, MAE in days, composite
//! parameter/loss model selection).

pub mod evaluation;
pub mod eventlog;
pub mod features;
pub mod grid;
pub mod models;
pub mod synthetic;
pub mod training;

pub use eventlog::{ColumnMap, Event, EventLog, ParseReport, SplitLog, Trace, Vocab};
pub use features::{Encoding, Normalizer, PreparedData, Sample, TaskTargets, TimeFeatures};
pub use models::{Model, ModelConfig, ModelType};

/// Seconds per day, for reporting time errors in days.
pub const SECONDS_PER_DAY: f64 = 86_400.0;
