//! Discrete-event simulation of sources, band servers and receivers.
//!
//! A run is single-threaded and fully determined by the scenario and seed:
//! every random source draws from its own ChaCha8 stream, and simultaneous
//! events are ordered by kind (completions, then arrivals, then feedback)
//! and insertion order.

mod dist;
mod engine;
mod estimator;
mod metrics;
mod packet;
mod reorder;
mod server;

pub use dist::DistributionSpec;
pub use engine::{run, run_observed, Accounting, RunOutcome, SimError};
pub use estimator::{stats_from_samples, InsufficientSamples, MomentEstimator, MIN_VACATION};
pub use metrics::MetricsReport;
pub use packet::Packet;
pub use reorder::{ReorderBuffer, ReorderError};
pub use server::BandServer;
