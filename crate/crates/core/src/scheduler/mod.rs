//! Per-packet band selection.
//!
//! One [`Scheduler`] instance serves one source queue. It holds the policy
//! state, the latest band statistics and the availability mask, and answers
//! [`Scheduler::next_band`] for every packet in arrival order.

mod kind;
mod token;

pub use kind::{ParseSchedulerError, SchedulerKind};
pub use token::{TokenRule, TokenState, TOKEN_EPSILON};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{BandStats, RateAllocation};
use crate::optimizer::{optimize, OptimizerConfig, OptimizerError};


#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedulerError {
    #[error("no available band for this packet")]
    NoAvailableBand,
    #[error("availability mask would disable every band")]
    AllBandsUnavailable,
    #[error("expected {expected} bands, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("band index {band} out of range for {bands} bands")]
    InvalidBand { band: usize, bands: usize },
    #[error("rate optimizer failed: {0}")]
    OptimizerFailure(#[from] OptimizerError),
}

/// Which bands a flow may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityMask {
    bits: Vec<bool>,
}

impl AvailabilityMask {
    pub fn new(bits: Vec<bool>) -> Result<Self, SchedulerError> {
        if !bits.iter().any(|b| *b) {
            return Err(SchedulerError::AllBandsUnavailable);
        }
        Ok(Self { bits })
    }

    pub fn all(bands: usize) -> Self {
        Self { bits: vec![true; bands] }
    }

    /// Replaces the bits; the mask is unchanged on error.
    pub fn update(&mut self, bits: Vec<bool>) -> Result<(), SchedulerError> {
        if bits.len() != self.bits.len() {
            return Err(SchedulerError::LengthMismatch {
                expected: self.bits.len(),
                got: bits.len(),
            });
        }
        *self = Self::new(bits)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_available(&self, band: usize) -> bool {
        self.bits.get(band).copied().unwrap_or(false)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn available(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(j, _)| j)
    }
}

/// What the scheduler needs to know about a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketTag {
    pub seq: u64,
    /// Transport connection the packet belongs to.
    pub conn: u64,
}

#[derive(Debug, Clone)]
enum Policy {
    Single(usize),
    RoundRobin { next: usize },
    /// Work assigned to each band, in seconds at the service rate in force
    /// when each packet was assigned.
    LoadBalancing { work: Vec<f64> },
    BandPerFlow { current: Option<(u64, usize)>, next: usize },
    MinimumDelay(RandomSplit),
    LeakyBucket(TokenState),
}

/// Order-blind split: each packet independently picks band `j` with
/// probability equal to the band's target fraction.
#[derive(Debug, Clone)]
struct RandomSplit {
    rng: ChaCha8Rng,
}

impl RandomSplit {
    fn next(&mut self, fractions: &[f64], mask: &AvailabilityMask) -> Option<usize> {
        let usable: f64 = fractions.iter().enumerate().filter(|(j, _)| mask.is_available(*j)).map(|(_, f)| f).sum();
        if usable <= 0.0 {
            return None;
        }
        let mut u = self.rng.random::<f64>() * usable;
        let mut last = None;
        for (j, f) in fractions.iter().enumerate() {
            if !mask.is_available(j) || *f <= 0.0 {
                continue;
            }
            last = Some(j);
            if u < *f {
                return Some(j);
            }
            u -= f;
        }
        last
    }
}

/// Lowest index wins ties.
fn argmax(values: &[f64], eligible: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, v) in values.iter().enumerate() {
        if !eligible(j) {
            continue;
        }
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(j);
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct Scheduler {
    kind: SchedulerKind,
    policy: Policy,
    stats: Vec<BandStats>,
    lambda_total: f64,
    mask: AvailabilityMask,
    optimizer: OptimizerConfig,
    target: Option<RateAllocation>,
}

impl Scheduler {
    pub fn new(
        kind: SchedulerKind,
        stats: Vec<BandStats>,
        lambda_total: f64,
        mask: AvailabilityMask,
    ) -> Result<Self, SchedulerError> {
        Self::with_options(kind, stats, lambda_total, mask, OptimizerConfig::default(), TokenRule::default(), 0)
    }

    pub fn with_options(
        kind: SchedulerKind,
        stats: Vec<BandStats>,
        lambda_total: f64,
        mask: AvailabilityMask,
        optimizer: OptimizerConfig,
        rule: TokenRule,
        seed: u64,
    ) -> Result<Self, SchedulerError> {
        let bands = stats.len();
        if mask.len() != bands {
            return Err(SchedulerError::LengthMismatch {
                expected: bands,
                got: mask.len(),
            });
        }
        let policy = match kind {
            SchedulerKind::SingleBand(j) => {
                if j >= bands {
                    return Err(SchedulerError::InvalidBand { band: j, bands });
                }
                Policy::Single(j)
            }
            SchedulerKind::EvenSplit => Policy::RoundRobin { next: 0 },
            SchedulerKind::LoadBalancing => Policy::LoadBalancing { work: vec![0.0; bands] },
            SchedulerKind::BandPerFlow => Policy::BandPerFlow { current: None, next: 0 },
            SchedulerKind::MinimumDelay => Policy::MinimumDelay(RandomSplit {
                rng: ChaCha8Rng::seed_from_u64(seed),
            }),
            SchedulerKind::LeakyBucket => Policy::LeakyBucket(TokenState::new(bands, rule)),
        };
        let mut scheduler = Self {
            kind,
            policy,
            stats,
            lambda_total,
            mask,
            optimizer,
            target: None,
        };
        scheduler.refresh_target()?;
        Ok(scheduler)
    }

    pub fn kind(&self) -> SchedulerKind {
        self.kind
    }

    pub fn mask(&self) -> &AvailabilityMask {
        &self.mask
    }

    pub fn stats(&self) -> &[BandStats] {
        &self.stats
    }

    /// Current optimal split, for the policies that use one.
    pub fn target(&self) -> Option<&RateAllocation> {
        self.target.as_ref()
    }

    pub fn tokens(&self) -> Option<&TokenState> {
        match &self.policy {
            Policy::LeakyBucket(t) => Some(t),
            _ => None,
        }
    }

    fn uses_optimizer(&self) -> bool {
        matches!(self.kind, SchedulerKind::MinimumDelay | SchedulerKind::LeakyBucket)
    }

    /// Re-solves the split over the available bands. On failure the previous
    /// target stays in force.
    fn refresh_target(&mut self) -> Result<(), SchedulerError> {
        if !self.uses_optimizer() {
            return Ok(());
        }
        let bands: Vec<usize> = self.mask.available().collect();
        let subset: Vec<BandStats> = bands.iter().map(|&j| self.stats[j]).collect();
        let solution = optimize(self.lambda_total, &subset, &self.optimizer)?;
        let mut lambdas = vec![0.0; self.stats.len()];
        for (&j, l) in bands.iter().zip(&solution.alloc.lambdas) {
            lambdas[j] = *l;
        }
        let alloc = RateAllocation::new(lambdas, self.lambda_total);
        if let Policy::LeakyBucket(tokens) = &mut self.policy {
            tokens.set_increments(&alloc, &self.stats);
            tokens.reset_unavailable(&self.mask);
        }
        self.target = Some(alloc);
        Ok(())
    }

    /// Installs fresh band statistics and recomputes the split where the
    /// policy needs one.
    pub fn update_feedback(&mut self, stats: &[BandStats], lambda_total: f64) -> Result<(), SchedulerError> {
        if stats.len() != self.stats.len() {
            return Err(SchedulerError::LengthMismatch {
                expected: self.stats.len(),
                got: stats.len(),
            });
        }
        for s in stats {
            s.validate().map_err(OptimizerError::from)?;
        }
        let previous = (self.stats.clone(), self.lambda_total);
        self.stats = stats.to_vec();
        self.lambda_total = lambda_total;
        if let Err(e) = self.refresh_target() {
            if self.uses_optimizer() {
                (self.stats, self.lambda_total) = previous;
            }
            return Err(e);
        }
        Ok(())
    }

    /// Replaces the availability mask. The split is re-solved over the new
    /// set of bands; if that fails the old mask is restored.
    pub fn update_availability(&mut self, bits: Vec<bool>) -> Result<(), SchedulerError> {
        let previous = self.mask.clone();
        self.mask.update(bits)?;
        if let Err(e) = self.refresh_target() {
            self.mask = previous;
            return Err(e);
        }
        Ok(())
    }

    /// Band for the next packet in arrival order.
    pub fn next_band(&mut self, pkt: PacketTag) -> Result<usize, SchedulerError> {
        let bands = self.stats.len();
        let mask = &self.mask;
        let band = match &mut self.policy {
            Policy::Single(j) => Some(*j).filter(|j| mask.is_available(*j)),
            Policy::RoundRobin { next } => {
                let found = (0..bands).map(|k| (*next + k) % bands).find(|j| mask.is_available(*j));
                if let Some(j) = found {
                    *next = (j + 1) % bands;
                }
                found
            }
            Policy::LoadBalancing { work } => {
                let load: Vec<f64> = work.iter().map(|w| -w).collect();
                let found = argmax(&load, |j| mask.is_available(j));
                if let Some(j) = found {
                    work[j] += 1.0 / self.stats[j].mu;
                }
                found
            }
            Policy::BandPerFlow { current, next } => match current {
                Some((conn, band)) if *conn == pkt.conn && mask.is_available(*band) => Some(*band),
                _ => {
                    let found = (0..bands).map(|k| (*next + k) % bands).find(|j| mask.is_available(*j));
                    if let Some(j) = found {
                        *next = (j + 1) % bands;
                        *current = Some((pkt.conn, j));
                    }
                    found
                }
            },
            Policy::MinimumDelay(split) => {
                let fractions = self.target.as_ref().map(|t| t.fractions()).unwrap_or_default();
                split.next(&fractions, mask)
            }
            Policy::LeakyBucket(tokens) => tokens.select(mask),
        };
        band.ok_or(SchedulerError::NoAvailableBand)
    }
}
