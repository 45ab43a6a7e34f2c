use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use super::estimator::MIN_VACATION;
use super::metrics::{Collector, MetricsReport};
use super::packet::Packet;
use super::reorder::{ReorderBuffer, ReorderError};
use super::server::BandServer;
use crate::config::{ConfigError, ScenarioConfig};
use crate::model::{BandStats, FlowKey};
use crate::optimizer::OptimizerConfig;
use crate::scheduler::{AvailabilityMask, PacketTag, Scheduler, SchedulerError, SchedulerKind, TokenRule};

const ARRIVAL_STREAM: u64 = 1 << 32;
const SERVICE_STREAM: u64 = 2 << 32;
const VACATION_STREAM: u64 = 3 << 32;
const SPLIT_STREAM: u64 = 4 << 32;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    ConfigInvalid(#[from] ConfigError),
    #[error("queue of flow {flow} on band {band} exceeded {cap} packets")]
    OverloadDetected { band: usize, flow: FlowKey, cap: usize },
    #[error("scheduler error for flow {flow}: {source}")]
    Scheduler {
        flow: FlowKey,
        #[source]
        source: SchedulerError,
    },
    #[error(transparent)]
    Reorder(#[from] ReorderError),
}

/// Where every generated packet is when the run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Accounting {
    pub generated: u64,
    pub released: u64,
    pub queued: u64,
    pub in_service: u64,
    pub in_propagation: u64,
    pub held_for_reorder: u64,
}

impl Accounting {
    pub fn balanced(&self) -> bool {
        self.generated == self.released + self.queued + self.in_service + self.in_propagation + self.held_for_reorder
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub accounting: Accounting,
    /// Feedback rounds where at least one band had too few samples.
    pub stale_feedback: u64,
}

#[derive(Debug)]
enum EventKind {
    BandDone(usize),
    Receive(Packet),
    Arrival(usize),
    Feedback(usize),
}

impl EventKind {
    fn class(&self) -> u8 {
        match self {
            EventKind::BandDone(_) | EventKind::Receive(_) => 0,
            EventKind::Arrival(_) => 1,
            EventKind::Feedback(_) => 2,
        }
    }
}

#[derive(Debug)]
struct Event {
    time: f64,
    class: u8,
    counter: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so that the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.counter.cmp(&self.counter))
    }
}

struct FlowState {
    key: FlowKey,
    lambda: f64,
    count: u64,
    generated: u64,
    conn_packets: u64,
    warmup_seq: u64,
    served: u64,
    mask: Vec<bool>,
    stats: Vec<BandStats>,
    scheduler: Scheduler,
    rng: ChaCha8Rng,
    gap: Exp<f64>,
    reorder: ReorderBuffer,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Model inputs a flow starts with before any measurement arrives.
fn nominal_stats(cfg: &ScenarioConfig, band: usize) -> BandStats {
    let b = &cfg.bands[band];
    let mu = 1.0 / b.service.mean();
    let x2 = b.service.second_moment().max(1.0 / (mu * mu));
    let (vbar, v2) = match cfg.band_vacation(band) {
        Some(v) => (v.mean(), v.second_moment().max(v.mean() * v.mean())),
        None => (MIN_VACATION, MIN_VACATION * MIN_VACATION),
    };
    BandStats { mu, x2, vbar, v2 }
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    now: f64,
    counter: u64,
    events: BinaryHeap<Event>,
    flows: Vec<FlowState>,
    servers: Vec<BandServer>,
    collector: Collector,
    released: u64,
    stale_feedback: u64,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ScenarioConfig, kind: SchedulerKind, seed: u64) -> Result<Self, SimError> {
        cfg.validate()?;
        let m = cfg.bands.len();
        let nominal: Vec<BandStats> = (0..m).map(|j| nominal_stats(cfg, j)).collect();
        let keys: Vec<FlowKey> = cfg.flows.iter().map(|f| f.key()).collect();
        let priorities: Vec<u8> = cfg
            .flows
            .iter()
            .map(|f| cfg.acs.iter().find(|a| a.ac == f.ac).map_or(0, |a| a.priority))
            .collect();
        let servers = cfg
            .bands
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let streams = (stream(seed, SERVICE_STREAM + j as u64), stream(seed, VACATION_STREAM + j as u64));
                BandServer::new(
                    keys.clone(),
                    &priorities,
                    &b.service,
                    cfg.band_vacation(j).as_ref(),
                    streams,
                    cfg.estimator_window,
                )
            })
            .collect();
        let mut flows = Vec::with_capacity(cfg.flows.len());
        for (i, f) in cfg.flows.iter().enumerate() {
            let mask = f.mask(m);
            // A flow barred from the requested band stays on its first usable one.
            let flow_kind = match kind {
                SchedulerKind::SingleBand(j) if !mask[j] => {
                    SchedulerKind::SingleBand(mask.iter().position(|&b| b).expect("validated mask"))
                }
                k => k,
            };
            let wrap = |source| SimError::Scheduler { flow: f.key(), source };
            let avail = AvailabilityMask::new(mask.clone()).map_err(wrap)?;
            let scheduler = Scheduler::with_options(
                flow_kind,
                nominal.clone(),
                f.lambda_pps,
                avail,
                OptimizerConfig::default(),
                TokenRule::default(),
                stream(seed, SPLIT_STREAM + i as u64).random(),
            )
            .map_err(wrap)?;
            flows.push(FlowState {
                key: f.key(),
                lambda: f.lambda_pps,
                count: f.packet_count,
                generated: 0,
                conn_packets: f.conn_packets,
                warmup_seq: (cfg.warmup_frac * f.packet_count as f64).ceil() as u64,
                served: 0,
                mask,
                stats: nominal.clone(),
                scheduler,
                rng: stream(seed, ARRIVAL_STREAM + i as u64),
                gap: Exp::new(f.lambda_pps).expect("validated rate"),
                reorder: ReorderBuffer::new(0),
            });
        }
        Ok(Self {
            cfg,
            now: 0.0,
            counter: 0,
            events: BinaryHeap::new(),
            flows,
            servers,
            collector: Collector::new(m),
            released: 0,
            stale_feedback: 0,
        })
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        let class = kind.class();
        self.events.push(Event {
            time,
            class,
            counter: self.counter,
            kind,
        });
        self.counter += 1;
    }

    fn start_band(&mut self, band: usize) {
        if let Some(end) = self.servers[band].start_next(self.now) {
            self.push(end, EventKind::BandDone(band));
        }
    }

    fn schedule_arrival(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        if flow.generated < flow.count {
            let t = self.now + flow.gap.sample(&mut flow.rng);
            self.push(t, EventKind::Arrival(f));
        }
    }

    fn arrival(&mut self, f: usize) -> Result<(), SimError> {
        let now = self.now;
        let flow = &mut self.flows[f];
        let seq = flow.generated;
        let conn = seq / flow.conn_packets;
        let band = flow
            .scheduler
            .next_band(PacketTag { seq, conn })
            .map_err(|source| SimError::Scheduler { flow: flow.key, source })?;
        flow.generated += 1;
        let mut pkt = Packet::new(seq, flow.key, f, conn, now);
        pkt.band = band;
        let key = flow.key;
        let server = &mut self.servers[band];
        if server.enqueue(f, pkt) > self.cfg.queue_cap {
            return Err(SimError::OverloadDetected {
                band,
                flow: key,
                cap: self.cfg.queue_cap,
            });
        }
        if server.is_idle() {
            server.wake(now);
            self.start_band(band);
        }
        self.schedule_arrival(f);
        Ok(())
    }

    fn band_done(&mut self, band: usize) {
        if let Some(pkt) = self.servers[band].complete(self.now) {
            let f = pkt.flow_index;
            self.flows[f].served += 1;
            if self.flows[f].served % self.cfg.feedback_interval == 0 {
                self.push(self.now, EventKind::Feedback(f));
            }
            let t = self.now + self.cfg.bands[band].prop_latency_s;
            self.push(t, EventKind::Receive(pkt));
        }
        self.start_band(band);
    }

    fn receive(&mut self, mut pkt: Packet, observer: &mut dyn FnMut(&Packet)) -> Result<(), SimError> {
        let flow = &mut self.flows[pkt.flow_index];
        pkt.received_at = self.now;
        pkt.out_of_order = pkt.seq != flow.reorder.next_expected();
        let out = flow.reorder.release(pkt, self.now)?;
        for p in &out {
            if p.seq >= flow.warmup_seq {
                self.collector.record(p);
            }
            observer(p);
        }
        self.released += out.len() as u64;
        Ok(())
    }

    fn feedback(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        let mut stale = false;
        for (j, server) in self.servers.iter().enumerate() {
            if !flow.mask[j] {
                continue;
            }
            match server.estimate_index(f, self.cfg.min_samples) {
                Ok(s) => flow.stats[j] = s,
                Err(_) => stale = true,
            }
        }
        self.stale_feedback += u64::from(stale);
        // A failed re-solve keeps the previous target.
        let _ = flow.scheduler.update_feedback(&flow.stats, flow.lambda);
    }

    fn run(mut self, observer: &mut dyn FnMut(&Packet)) -> Result<RunOutcome, SimError> {
        for j in 0..self.servers.len() {
            self.start_band(j);
        }
        for f in 0..self.flows.len() {
            self.schedule_arrival(f);
        }
        let total: u64 = self.flows.iter().map(|f| f.count).sum();
        let limit = self.cfg.max_time_s.unwrap_or(f64::INFINITY);
        while self.released < total {
            let Some(ev) = self.events.pop() else { break };
            if ev.time > limit {
                self.events.push(ev);
                self.now = limit;
                break;
            }
            debug_assert!(ev.time >= self.now);
            self.now = ev.time;
            match ev.kind {
                EventKind::Arrival(f) => self.arrival(f)?,
                EventKind::BandDone(j) => self.band_done(j),
                EventKind::Receive(p) => self.receive(p, observer)?,
                EventKind::Feedback(f) => self.feedback(f),
            }
        }
        let accounting = Accounting {
            generated: self.flows.iter().map(|f| f.generated).sum(),
            released: self.released,
            queued: self.servers.iter().map(|s| s.queued() as u64).sum(),
            in_service: self.servers.iter().filter(|s| s.is_serving()).count() as u64,
            in_propagation: self.events.iter().filter(|e| matches!(e.kind, EventKind::Receive(_))).count() as u64,
            held_for_reorder: self.flows.iter().map(|f| f.reorder.held() as u64).sum(),
        };
        Ok(RunOutcome {
            report: self.collector.finish(accounting.generated, self.now),
            accounting,
            stale_feedback: self.stale_feedback,
        })
    }
}

/// Runs one replication of `cfg` under policy `kind`.
pub fn run(cfg: &ScenarioConfig, kind: SchedulerKind, seed: u64) -> Result<MetricsReport, SimError> {
    run_observed(cfg, kind, seed, &mut |_| {}).map(|o| o.report)
}

/// Like [`run`], calling `observer` for every packet the receivers release,
/// in release order, warm-up included.
pub fn run_observed(
    cfg: &ScenarioConfig,
    kind: SchedulerKind,
    seed: u64,
    observer: &mut dyn FnMut(&Packet),
) -> Result<RunOutcome, SimError> {
    Engine::new(cfg, kind, seed)?.run(observer)
}
