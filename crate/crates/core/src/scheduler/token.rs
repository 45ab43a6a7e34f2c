use crate::model::{BandStats, RateAllocation};

use super::{argmax, AvailabilityMask};

/// Slack on the `T_j ≥ 1` test.
pub const TOKEN_EPSILON: f64 = 1e-12;

/// How the per-band token increment is derived from the optimal split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TokenRule {
    /// `R_j = λ_j*/λ`. Selections converge to the optimal fractions.
    #[default]
    Share,
    /// `R_j = λ_j*/μ_j`. Selections converge to `ρ_j / Σρ`, which equals the
    /// optimal fractions only when every band has the same service rate.
    ServiceRatio,
}

/// Leaky-bucket tokens `T_j` and increments `R_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenState {
    tokens: Vec<f64>,
    increments: Vec<f64>,
    rule: TokenRule,
}

impl TokenState {
    pub fn new(bands: usize, rule: TokenRule) -> Self {
        Self {
            tokens: vec![0.0; bands],
            increments: vec![0.0; bands],
            rule,
        }
    }

    /// Tokens start at zero with the given increments.
    pub fn with_increments(increments: Vec<f64>) -> Self {
        Self {
            tokens: vec![0.0; increments.len()],
            increments,
            rule: TokenRule::default(),
        }
    }

    pub fn tokens(&self) -> &[f64] {
        &self.tokens
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn rule(&self) -> TokenRule {
        self.rule
    }

    pub(crate) fn set_increments(&mut self, alloc: &RateAllocation, stats: &[BandStats]) {
        self.increments = alloc
            .lambdas
            .iter()
            .zip(stats)
            .map(|(l, s)| match self.rule {
                TokenRule::Share => l / alloc.total,
                TokenRule::ServiceRatio => l / s.mu,
            })
            .collect();
    }

    pub(crate) fn reset_unavailable(&mut self, mask: &AvailabilityMask) {
        for (j, t) in self.tokens.iter_mut().enumerate() {
            if !mask.is_available(j) {
                *t = 0.0;
            }
        }
    }

    /// One pass of the selection loop: add `R_j` to every token until some
    /// available token reaches 1, send on the largest available token and
    /// debit it by one.
    pub fn select(&mut self, mask: &AvailabilityMask) -> Option<usize> {
        let usable = (0..self.tokens.len()).any(|j| mask.is_available(j) && self.increments[j] > 0.0);
        if !usable {
            return None;
        }
        while !(0..self.tokens.len()).any(|j| mask.is_available(j) && self.tokens[j] >= 1.0 - TOKEN_EPSILON) {
            for (t, r) in self.tokens.iter_mut().zip(&self.increments) {
                *t += r;
            }
        }
        let band = argmax(&self.tokens, |j| mask.is_available(j))?;
        self.tokens[band] -= 1.0;
        Some(band)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(increments: Vec<f64>, n: usize) -> Vec<usize> {
        let mut state = TokenState::with_increments(increments);
        let mask = AvailabilityMask::all(state.tokens.len());
        (0..n).map(|_| state.select(&mask).unwrap() + 1).collect()
    }

    #[test]
    fn hand_trace_half_and_quarter() {
        // T: (0.5,0.25) -> (1,0.5) send 1 -> (0,0.5) -> (0.5,0.75) -> (1,1)
        // send 1 (tie, lowest index) -> (0,1) send 2 -> (0,0) and repeat.
        assert_eq!(trace(vec![0.5, 0.25], 9), vec![1, 1, 2, 1, 1, 2, 1, 1, 2]);
    }

    #[test]
    fn hand_trace_equal_halves() {
        assert_eq!(trace(vec![0.5, 0.5], 6), vec![1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn zero_increments_select_nothing() {
        let mut state = TokenState::with_increments(vec![0.0, 0.0]);
        assert_eq!(state.select(&AvailabilityMask::all(2)), None);
    }

    #[test]
    fn service_ratio_rule_follows_utilizations() {
        let stats = [BandStats::deterministic(200.0, 0.01).unwrap(), BandStats::deterministic(100.0, 0.01).unwrap()];
        let alloc = RateAllocation::new(vec![100.0, 50.0], 150.0);
        let mut share = TokenState::new(2, TokenRule::Share);
        share.set_increments(&alloc, &stats);
        assert_eq!(share.increments(), &[100.0 / 150.0, 50.0 / 150.0]);
        let mut ratio = TokenState::new(2, TokenRule::ServiceRatio);
        ratio.set_increments(&alloc, &stats);
        assert_eq!(ratio.increments(), &[0.5, 0.5]);
    }
}
