use std::collections::VecDeque;

use thiserror::Error;

use crate::model::BandStats;

/// Floor for the mean vacation when a queue never waits on others.
pub const MIN_VACATION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("need {need} samples, have {service} service and {vacation} vacation samples")]
pub struct InsufficientSamples {
    pub service: usize,
    pub vacation: usize,
    pub need: usize,
}

/// First and second moment of the last `window` samples.
#[derive(Debug, Clone)]
pub struct MomentEstimator {
    window: usize,
    samples: VecDeque<f64>,
    sum: f64,
    sum_sq: f64,
    since_resum: usize,
}

impl MomentEstimator {
    pub fn new(window: usize) -> Self {
        let window = window.max(1);
        Self {
            window,
            samples: VecDeque::with_capacity(window),
            sum: 0.0,
            sum_sq: 0.0,
            since_resum: 0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if self.samples.len() == self.window {
            let old = self.samples.pop_front().expect("full window");
            self.sum -= old;
            self.sum_sq -= old * old;
        }
        self.samples.push_back(x);
        self.sum += x;
        self.sum_sq += x * x;
        self.since_resum += 1;
        // Running sums drift under repeated add/subtract; rebuild them once
        // per window turnover.
        if self.since_resum >= self.window {
            self.sum = self.samples.iter().sum();
            self.sum_sq = self.samples.iter().map(|v| v * v).sum();
            self.since_resum = 0;
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.samples.len() as f64
    }

    pub fn mean_sq(&self) -> f64 {
        self.sum_sq / self.samples.len() as f64
    }
}

/// Band statistics from measured service and vacation samples.
///
/// The second moments are clamped to their lower bounds so that estimates
/// from a short or constant window remain valid model inputs.
pub fn stats_from_samples(
    service: &MomentEstimator,
    vacation: &MomentEstimator,
    min_samples: usize,
) -> Result<BandStats, InsufficientSamples> {
    if service.len() < min_samples || vacation.len() < min_samples {
        return Err(InsufficientSamples {
            service: service.len(),
            vacation: vacation.len(),
            need: min_samples,
        });
    }
    let mu = 1.0 / service.mean();
    let x2 = service.mean_sq().max(1.0 / (mu * mu));
    let vbar = vacation.mean().max(MIN_VACATION);
    let v2 = vacation.mean_sq().max(vbar * vbar);
    Ok(BandStats { mu, x2, vbar, v2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn filled(window: usize, xs: impl IntoIterator<Item = f64>) -> MomentEstimator {
        let mut est = MomentEstimator::new(window);
        for x in xs {
            est.push(x);
        }
        est
    }

    #[test]
    fn deterministic_service() {
        let svc = filled(100, std::iter::repeat(0.1).take(100));
        let vac = filled(100, std::iter::repeat(0.0).take(100));
        let s = stats_from_samples(&svc, &vac, 30).unwrap();
        assert!((s.mu - 10.0).abs() < 1e-12);
        assert!((s.x2 - 0.01).abs() < 1e-15);
        assert_eq!(s.vbar, MIN_VACATION);
        assert!(s.v2 >= s.vbar * s.vbar);
    }

    #[test]
    fn exponential_second_moment() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let exp = Exp::new(10.0).unwrap();
        let n = 100_000;
        let svc = filled(n, (0..n).map(|_| exp.sample(&mut rng)));
        let vac = filled(n, (0..n).map(|_| exp.sample(&mut rng)));
        let s = stats_from_samples(&svc, &vac, 30).unwrap();
        assert!((s.x2 / 0.02 - 1.0).abs() < 0.03, "x2 = {}", s.x2);
        assert!((s.v2 / 0.02 - 1.0).abs() < 0.03);
    }

    #[test]
    fn too_few_samples() {
        let svc = filled(100, std::iter::repeat(0.1).take(10));
        let vac = filled(100, std::iter::repeat(0.1).take(10));
        let err = stats_from_samples(&svc, &vac, 30).unwrap_err();
        assert_eq!(err.need, 30);
        assert_eq!(err.service, 10);
    }

    #[test]
    fn window_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let exp = Exp::new(4.0).unwrap();
        for w in [100usize, 1000, 10_000] {
            let est = filled(w, (0..3 * w).map(|_| exp.sample(&mut rng)));
            let bound = 2.0 / (w as f64).sqrt();
            assert!((est.mean() / 0.25 - 1.0).abs() < bound, "w = {w}");
        }
    }

    #[test]
    fn matches_window_contents() {
        let mut est = MomentEstimator::new(50);
        for i in 0..1234 {
            est.push((i as f64 * 0.37).sin().abs() * 1e-3 + 1e-4);
            let tail: Vec<f64> = (0..=i)
                .rev()
                .take(50)
                .map(|k| (k as f64 * 0.37).sin().abs() * 1e-3 + 1e-4)
                .collect();
            let mean = tail.iter().sum::<f64>() / tail.len() as f64;
            let mean_sq = tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64;
            assert!(est.len() <= 50);
            assert!((est.mean() - mean).abs() <= 1e-9 * mean);
            assert!((est.mean_sq() - mean_sq).abs() <= 1e-9 * mean_sq);
        }
    }

    #[test]
    fn constant_samples() {
        let mut est = MomentEstimator::new(10);
        for _ in 0..25 {
            est.push(0.1);
        }
        assert!((est.mean() - 0.1).abs() < 1e-15);
        assert!((est.mean_sq() - 0.01).abs() < 1e-15);
    }
}
