use crate::model::FlowKey;

/// One packet's journey: source, band queue, service, receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// Per-flow sequence number, assigned at creation.
    pub seq: u64,
    pub flow: FlowKey,
    /// Index of the flow in the scenario.
    pub flow_index: usize,
    /// Transport connection the packet belongs to.
    pub conn: u64,
    pub band: usize,
    pub created_at: f64,
    pub service_start: f64,
    /// Service completion at the sender.
    pub departed_at: f64,
    /// Arrival at the receiver, after propagation.
    pub received_at: f64,
    /// Hand-off to the upper layer, after resequencing.
    pub released_at: f64,
    /// Some lower sequence number had not yet been received when this one was.
    pub out_of_order: bool,
}

impl Packet {
    pub fn new(seq: u64, flow: FlowKey, flow_index: usize, conn: u64, created_at: f64) -> Self {
        Self {
            seq,
            flow,
            flow_index,
            conn,
            band: 0,
            created_at,
            service_start: created_at,
            departed_at: created_at,
            received_at: created_at,
            released_at: created_at,
            out_of_order: false,
        }
    }

    pub fn reseq_delay(&self) -> f64 {
        self.released_at - self.received_at
    }

    /// Sender-side sojourn: queueing plus service.
    pub fn sojourn(&self) -> f64 {
        self.departed_at - self.created_at
    }

    pub fn latency(&self) -> f64 {
        self.released_at - self.created_at
    }

    pub fn timestamps_monotone(&self) -> bool {
        self.created_at <= self.service_start
            && self.service_start <= self.departed_at
            && self.departed_at <= self.received_at
            && self.received_at <= self.released_at
    }
}
