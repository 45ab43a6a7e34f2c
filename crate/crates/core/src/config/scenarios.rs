//! Bundled scenarios.
//!
//! Band 0 is the faster band, band 1 the slower one, with service rates in
//! the ratio 1.75 : 1.

use super::{AcConfig, BandConfig, FlowConfig, ScenarioConfig, SchedulerSet, VacationMode};
use crate::sim::DistributionSpec;

pub const NAMES: [&str; 3] = ["two_band_asym", "two_band_high_rtt", "two_sta_mixed"];

const FAST_PPS: f64 = 1750.0;
const SLOW_PPS: f64 = 1000.0;
const PACKETS: u64 = 50_000;

fn band(name: &str, pps: f64, prop: f64) -> BandConfig {
    BandConfig {
        name: Some(name.to_string()),
        service: DistributionSpec::Exponential { mean: 1.0 / pps },
        prop_latency_s: prop,
        vacation: None,
    }
}

fn flow(sta: u32, lambda: f64, bands: Option<Vec<bool>>) -> FlowConfig {
    FlowConfig {
        sta,
        ac: 0,
        lambda_pps: lambda,
        packet_count: PACKETS,
        bands,
        conn_packets: 1000,
    }
}

fn base(name: &str, bands: Vec<BandConfig>, stas: u32, flows: Vec<FlowConfig>, vacation_mode: VacationMode) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        bands,
        stas,
        acs: vec![AcConfig { ac: 0, priority: 0 }],
        flows,
        schedulers: SchedulerSet::All,
        vacation_mode,
        feedback_interval: 100,
        warmup_frac: 0.1,
        seed_base: 1,
        replications: 10,
        max_time_s: None,
        queue_cap: 1_000_000,
        estimator_window: 1000,
        min_samples: 30,
    }
}

fn contention() -> VacationMode {
    VacationMode::Parametric(DistributionSpec::Exponential { mean: 5e-4 })
}

/// One station, two bands of unequal rate.
pub fn two_band_asym() -> ScenarioConfig {
    base(
        "two_band_asym",
        vec![band("fast", FAST_PPS, 0.0), band("slow", SLOW_PPS, 0.0)],
        1,
        vec![flow(0, 1500.0, None)],
        contention(),
    )
}

/// `two_band_asym` with 100 ms of propagation on both bands.
pub fn two_band_high_rtt() -> ScenarioConfig {
    let mut cfg = two_band_asym();
    cfg.name = "two_band_high_rtt".to_string();
    for b in &mut cfg.bands {
        b.prop_latency_s = 0.1;
    }
    cfg
}

/// Two stations; station 1 may only use the slow band, which it shares
/// with station 0. Vacations come from serving the other station.
pub fn two_sta_mixed() -> ScenarioConfig {
    let mut cfg = base(
        "two_sta_mixed",
        vec![band("fast", FAST_PPS, 0.0), band("slow", SLOW_PPS, 0.0)],
        2,
        vec![flow(0, 1200.0, None), flow(1, 400.0, Some(vec![false, true]))],
        VacationMode::Emergent,
    );
    cfg.schedulers = SchedulerSet::List(vec![
        crate::scheduler::SchedulerKind::EvenSplit,
        crate::scheduler::SchedulerKind::LoadBalancing,
        crate::scheduler::SchedulerKind::MinimumDelay,
        crate::scheduler::SchedulerKind::LeakyBucket,
    ]);
    cfg
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "two_band_asym" => Some(two_band_asym()),
        "two_band_high_rtt" => Some(two_band_high_rtt()),
        "two_sta_mixed" => Some(two_sta_mixed()),
        _ => None,
    }
}
