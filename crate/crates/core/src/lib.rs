//! Multi-band packet aggregation: a per-band delay model, the rate split
//! that minimizes mean delay, per-packet schedulers that realize a split,
//! and a discrete-event simulator to measure them.

pub mod config;
pub mod model;
pub mod optimizer;
pub mod scheduler;
pub mod sim;

pub use config::{ConfigError, ScenarioConfig};
pub use model::{aggregate_delay, band_delay, BandStats, FlowKey, ModelError, RateAllocation, TrafficSpec};
pub use optimizer::{optimize, LagrangeSolution, Method, OptimizerConfig, OptimizerError};
pub use scheduler::{AvailabilityMask, PacketTag, Scheduler, SchedulerError, SchedulerKind, TokenRule, TokenState};
pub use sim::{DistributionSpec, MetricsReport, SimError};
