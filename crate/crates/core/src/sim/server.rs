use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dist::{DistributionSpec, Sampler};
use super::estimator::{stats_from_samples, InsufficientSamples, MomentEstimator};
use super::packet::Packet;
use crate::model::{BandStats, FlowKey};

#[derive(Debug, Clone)]
enum State {
    Idle,
    Serving { pkt: Packet, duration: f64 },
    Vacation { duration: f64 },
}

/// One band's transmitter.
///
/// Each flow has its own FIFO queue. Access categories are served in strict
/// priority order and stations within a category in round-robin, one packet
/// per turn. In parametric mode the band takes a vacation every time it
/// finds all queues empty.
#[derive(Debug, Clone)]
pub struct BandServer {
    flows: Vec<FlowKey>,
    queues: Vec<VecDeque<Packet>>,
    groups: Vec<Vec<usize>>,
    cursor: Vec<usize>,
    service: Sampler,
    service_rng: ChaCha8Rng,
    vacation: Option<(Sampler, ChaCha8Rng)>,
    state: State,
    queued: usize,
    /// Time spent serving or on vacation so far.
    work: f64,
    idle: f64,
    idle_since: f64,
    /// `work` at each flow's last service completion.
    marks: Vec<Option<f64>>,
    service_est: Vec<MomentEstimator>,
    vacation_est: Vec<MomentEstimator>,
}

impl BandServer {
    /// `priorities[i]` is the strict-priority rank of flow `i` (higher first).
    /// `streams` are the seeded service and vacation generators.
    pub fn new(
        flows: Vec<FlowKey>,
        priorities: &[u8],
        service: &DistributionSpec,
        vacation: Option<&DistributionSpec>,
        streams: (ChaCha8Rng, ChaCha8Rng),
        window: usize,
    ) -> Self {
        let n = flows.len();
        let mut ranks: Vec<(u8, u8)> = flows.iter().zip(priorities).map(|(k, &p)| (p, k.ac)).collect();
        ranks.sort_by(|a, b| b.cmp(a));
        ranks.dedup();
        let groups: Vec<Vec<usize>> = ranks
            .iter()
            .map(|&(p, ac)| {
                let mut members: Vec<usize> = (0..n).filter(|&i| priorities[i] == p && flows[i].ac == ac).collect();
                members.sort_by_key(|&i| flows[i].sta);
                members
            })
            .collect();
        Self {
            cursor: vec![0; groups.len()],
            groups,
            queues: vec![VecDeque::new(); n],
            service: service.sampler(),
            service_rng: streams.0,
            vacation: vacation.map(|v| (v.sampler(), streams.1)),
            state: State::Idle,
            queued: 0,
            work: 0.0,
            idle: 0.0,
            idle_since: 0.0,
            marks: vec![None; n],
            service_est: vec![MomentEstimator::new(window); n],
            vacation_est: vec![MomentEstimator::new(window); n],
            flows,
        }
    }

    /// Seedless constructor for tests and tools.
    pub fn with_seed(flows: Vec<FlowKey>, service: &DistributionSpec, vacation: Option<&DistributionSpec>, seed: u64) -> Self {
        let priorities = vec![0; flows.len()];
        let streams = (ChaCha8Rng::seed_from_u64(seed), ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9));
        Self::new(flows, &priorities, service, vacation, streams, 1000)
    }

    pub fn is_idle(&self) -> bool {
        matches!(self.state, State::Idle)
    }

    pub fn is_serving(&self) -> bool {
        matches!(self.state, State::Serving { .. })
    }

    pub fn queued(&self) -> usize {
        self.queued
    }

    pub fn queue_len(&self, flow: usize) -> usize {
        self.queues[flow].len()
    }

    /// Total time the band sat idle with every queue empty, up to the last
    /// state change.
    pub fn idle_time(&self) -> f64 {
        self.idle
    }

    /// Appends to the flow's queue and returns the new queue length.
    pub fn enqueue(&mut self, flow: usize, pkt: Packet) -> usize {
        self.queues[flow].push_back(pkt);
        self.queued += 1;
        self.queues[flow].len()
    }

    fn pick(&mut self) -> Option<usize> {
        for (g, members) in self.groups.iter().enumerate() {
            let n = members.len();
            for k in 0..n {
                let idx = members[(self.cursor[g] + k) % n];
                if !self.queues[idx].is_empty() {
                    self.cursor[g] = (self.cursor[g] + k + 1) % n;
                    return Some(idx);
                }
            }
        }
        None
    }

    /// Starts the next service or vacation from an idle server. Returns the
    /// time it ends, or `None` if the server stays idle.
    pub fn start_next(&mut self, now: f64) -> Option<f64> {
        debug_assert!(self.is_idle());
        if let Some(f) = self.pick() {
            let mut pkt = self.queues[f].pop_front().expect("picked queue is non-empty");
            self.queued -= 1;
            if self.vacation.is_none() {
                if let Some(mark) = self.marks[f] {
                    self.vacation_est[f].push(self.work - mark);
                }
            }
            pkt.service_start = now;
            let duration = self.service.sample(&mut self.service_rng);
            self.state = State::Serving { pkt, duration };
            return Some(now + duration);
        }
        if let Some((sampler, rng)) = &mut self.vacation {
            let duration = sampler.sample(rng);
            self.state = State::Vacation { duration };
            return Some(now + duration);
        }
        self.idle_since = now;
        None
    }

    /// Ends the current service or vacation. Returns the served packet.
    pub fn complete(&mut self, now: f64) -> Option<Packet> {
        match std::mem::replace(&mut self.state, State::Idle) {
            State::Serving { mut pkt, duration } => {
                self.work += duration;
                let f = pkt.flow_index;
                self.marks[f] = Some(self.work);
                self.service_est[f].push(duration);
                pkt.departed_at = now;
                Some(pkt)
            }
            State::Vacation { duration } => {
                self.work += duration;
                for est in &mut self.vacation_est {
                    est.push(duration);
                }
                None
            }
            State::Idle => None,
        }
    }

    /// Leaves the idle state because work arrived at `now`.
    pub fn wake(&mut self, now: f64) {
        if self.is_idle() {
            self.idle += now - self.idle_since;
        }
    }

    /// Measured statistics of this band as seen by `flow`.
    pub fn estimate_stats(&self, flow: FlowKey, min_samples: usize) -> Result<BandStats, InsufficientSamples> {
        let f = self.flows.iter().position(|k| *k == flow).ok_or(InsufficientSamples {
            service: 0,
            vacation: 0,
            need: min_samples,
        })?;
        self.estimate_index(f, min_samples)
    }

    pub(crate) fn estimate_index(&self, flow: usize, min_samples: usize) -> Result<BandStats, InsufficientSamples> {
        stats_from_samples(&self.service_est[flow], &self.vacation_est[flow], min_samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(flow: usize, seq: u64, key: FlowKey) -> Packet {
        Packet::new(seq, key, flow, 0, 0.0)
    }

    #[test]
    fn round_robin_within_category() {
        let keys = vec![FlowKey::new(0, 0), FlowKey::new(1, 0)];
        let svc = DistributionSpec::Deterministic { mean: 1.0 };
        let mut s = BandServer::with_seed(keys.clone(), &svc, None, 1);
        for seq in 0..3 {
            s.enqueue(0, pkt(0, seq, keys[0]));
            s.enqueue(1, pkt(1, seq, keys[1]));
        }
        let mut order = Vec::new();
        let mut now = 0.0;
        while let Some(t) = s.start_next(now) {
            now = t;
            order.push(s.complete(now).unwrap().flow_index);
        }
        assert_eq!(order, vec![0, 1, 0, 1, 0, 1]);
        assert_eq!(s.queued(), 0);
        assert!(s.is_idle());
    }

    #[test]
    fn strict_priority_across_categories() {
        let keys = vec![FlowKey::new(0, 0), FlowKey::new(0, 3)];
        let svc = DistributionSpec::Deterministic { mean: 1.0 };
        let streams = (ChaCha8Rng::seed_from_u64(0), ChaCha8Rng::seed_from_u64(1));
        let mut s = BandServer::new(keys.clone(), &[0, 7], &svc, None, streams, 100);
        for seq in 0..2 {
            s.enqueue(0, pkt(0, seq, keys[0]));
            s.enqueue(1, pkt(1, seq, keys[1]));
        }
        let mut order = Vec::new();
        let mut now = 0.0;
        while let Some(t) = s.start_next(now) {
            now = t;
            order.push(s.complete(now).unwrap().flow_index);
        }
        assert_eq!(order, vec![1, 1, 0, 0]);
    }

    #[test]
    fn emergent_vacation_is_time_serving_others() {
        let keys = vec![FlowKey::new(0, 0), FlowKey::new(1, 0)];
        let svc = DistributionSpec::Exponential { mean: 0.01 };
        let mut s = BandServer::with_seed(keys.clone(), &svc, None, 3);
        for seq in 0..500 {
            s.enqueue(0, pkt(0, seq, keys[0]));
            s.enqueue(1, pkt(1, seq, keys[1]));
        }
        let mut now = 0.0;
        while let Some(t) = s.start_next(now) {
            now = t;
            s.complete(now);
        }
        let a = s.estimate_stats(keys[0], 30).unwrap();
        let b = s.estimate_stats(keys[1], 30).unwrap();
        // Strict alternation: each flow's vacation is one service of the other.
        assert!((a.vbar - 1.0 / b.mu).abs() < 0.1 * a.vbar);
        assert!((b.vbar - 1.0 / a.mu).abs() < 0.1 * b.vbar);
        assert!(a.vbar > 0.0 && a.v2 >= a.vbar * a.vbar);
    }

    #[test]
    fn parametric_vacations_when_empty() {
        let keys = vec![FlowKey::new(0, 0)];
        let svc = DistributionSpec::Deterministic { mean: 1.0 };
        let vac = DistributionSpec::Deterministic { mean: 0.5 };
        let mut s = BandServer::with_seed(keys, &svc, Some(&vac), 0);
        assert_eq!(s.start_next(0.0), Some(0.5));
        assert!(s.complete(0.5).is_none());
        assert_eq!(s.start_next(0.5), Some(1.0));
    }
}
