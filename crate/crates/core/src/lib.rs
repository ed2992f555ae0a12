//! Agent-based generator for labeled synthetic transaction data.
//!
//! Two models are provided. The simple model emits one-sided cash events
//! (deposits and withdrawals) per agent; the graph model emits
//! sender-to-receiver transactions with amounts. Both run a single simulated
//! day of 96 fifteen-minute steps, where each agent type transacts following
//! a wrapped Gaussian over the time of day.
//!
//! Downstream, [`features`] turns a run into per-agent feature rows,
//! [`detectors`] hosts a CART tree, a diagonal Gaussian mixture and an
//! isolation forest, and [`metrics`] scores predictions against the
//! ground-truth labels.

pub mod abm;
pub mod detectors;
pub mod error;
pub mod features;
pub mod io_export;
pub mod metrics;
pub mod rng;
pub mod schedule;

pub use abm::{AgentTypeParams, Label, ModelConfig, ModelKind, SimRun, TransactionEvent};
pub use error::{Error, Result};
pub use features::{AgentFeatures, FeatureSet};
pub use metrics::{ConfusionMatrix, MetricBundle};
pub use schedule::ProbTable;

/// Steps in one simulated day.
pub const STEPS_PER_DAY: usize = 96;
/// Minutes covered by one step.
pub const MINUTES_PER_STEP: u32 = 15;
/// Seed used when nothing else provides one.
pub const DEFAULT_SEED: u64 = 42;
