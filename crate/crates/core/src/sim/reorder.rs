use std::collections::BTreeMap;

use thiserror::Error;

use super::packet::Packet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReorderError {
    #[error("sequence number {0} already received")]
    DuplicateSeq(u64),
}

/// Receiver-side resequencing for one flow.
///
/// Packets are handed up strictly in sequence order. A packet that arrives
/// ahead of a gap is held until every lower sequence number has arrived.
#[derive(Debug, Clone, Default)]
pub struct ReorderBuffer {
    next: u64,
    held: BTreeMap<u64, Packet>,
}

impl ReorderBuffer {
    pub fn new(first_seq: u64) -> Self {
        Self {
            next: first_seq,
            held: BTreeMap::new(),
        }
    }

    /// Next sequence number the receiver is waiting for.
    pub fn next_expected(&self) -> u64 {
        self.next
    }

    pub fn held(&self) -> usize {
        self.held.len()
    }

    /// Accepts `pkt` at time `now` and returns the longest in-order run that
    /// became deliverable, each stamped `released_at = now`.
    pub fn release(&mut self, mut pkt: Packet, now: f64) -> Result<Vec<Packet>, ReorderError> {
        let seq = pkt.seq;
        if seq < self.next || self.held.contains_key(&seq) {
            return Err(ReorderError::DuplicateSeq(seq));
        }
        if seq != self.next {
            self.held.insert(seq, pkt);
            return Ok(Vec::new());
        }
        pkt.released_at = now;
        let mut out = vec![pkt];
        self.next += 1;
        while let Some(mut p) = self.held.remove(&self.next) {
            p.released_at = now;
            out.push(p);
            self.next += 1;
        }
        Ok(out)
    }
}
