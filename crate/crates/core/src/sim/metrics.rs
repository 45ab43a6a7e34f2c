use serde::{Deserialize, Serialize};

use super::packet::Packet;

/// Summary of one simulation run over the measured (post warm-up) packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub generated: u64,
    pub delivered: u64,
    pub goodput_pps: f64,
    pub mean_latency_s: f64,
    pub p95_latency_s: f64,
    pub mean_reseq_delay_s: f64,
    pub max_reseq_delay_s: f64,
    pub out_of_order_frac: f64,
    pub mean_wait_s: f64,
    pub per_band_frac: Vec<f64>,
    /// Mean sender-side sojourn (queueing plus service) per band.
    pub per_band_mean_delay_s: Vec<f64>,
    pub sim_time_s: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Collector {
    latencies: Vec<f64>,
    reseq_sum: f64,
    reseq_max: f64,
    wait_sum: f64,
    out_of_order: u64,
    band_count: Vec<u64>,
    band_delay: Vec<f64>,
    first_created: f64,
    last_released: f64,
}

impl Collector {
    pub fn new(bands: usize) -> Self {
        Self {
            latencies: Vec::new(),
            reseq_sum: 0.0,
            reseq_max: 0.0,
            wait_sum: 0.0,
            out_of_order: 0,
            band_count: vec![0; bands],
            band_delay: vec![0.0; bands],
            first_created: f64::INFINITY,
            last_released: f64::NEG_INFINITY,
        }
    }

    pub fn record(&mut self, p: &Packet) {
        self.latencies.push(p.latency());
        let reseq = p.reseq_delay();
        self.reseq_sum += reseq;
        self.reseq_max = self.reseq_max.max(reseq);
        self.wait_sum += p.service_start - p.created_at;
        self.out_of_order += u64::from(p.out_of_order);
        self.band_count[p.band] += 1;
        self.band_delay[p.band] += p.sojourn();
        self.first_created = self.first_created.min(p.created_at);
        self.last_released = self.last_released.max(p.released_at);
    }

    pub fn finish(mut self, generated: u64, sim_time: f64) -> MetricsReport {
        let n = self.latencies.len();
        let nf = n.max(1) as f64;
        let mean_latency = self.latencies.iter().sum::<f64>() / nf;
        self.latencies.sort_by(f64::total_cmp);
        let p95 = if n == 0 {
            0.0
        } else {
            let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
            self.latencies[rank - 1]
        };
        let span = self.last_released - self.first_created;
        MetricsReport {
            generated,
            delivered: n as u64,
            goodput_pps: if n > 0 && span > 0.0 { n as f64 / span } else { 0.0 },
            mean_latency_s: mean_latency,
            p95_latency_s: p95,
            mean_reseq_delay_s: self.reseq_sum / nf,
            max_reseq_delay_s: self.reseq_max,
            out_of_order_frac: self.out_of_order as f64 / nf,
            mean_wait_s: self.wait_sum / nf,
            per_band_frac: self.band_count.iter().map(|&c| c as f64 / nf).collect(),
            per_band_mean_delay_s: self
                .band_count
                .iter()
                .zip(&self.band_delay)
                .map(|(&c, &d)| if c > 0 { d / c as f64 } else { 0.0 })
                .collect(),
            sim_time_s: sim_time,
        }
    }
}
