//! Analytic delay model for one tagged queue split across several bands.
//!
//! Each band is an M/G/1 queue with vacations. The per-packet sojourn time on
//! band `j` at arrival rate `λ_j` is
//!
//! ```text
//! T_j(λ_j) = λ_j·E[X²] / (2·(1 − λ_j/μ_j)) + E[V²] / (2·E[V]) + 1/μ_j
//! ```
//!
//! and the objective minimized by the optimizer is the arrival-weighted mean
//! of `T_j` over all bands.
//!
//! Units are seconds and packets/second everywhere.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of EDCA access categories.
pub const ACCESS_CATEGORIES: u8 = 4;

/// Utilization at or above which a band is treated as unstable.
pub const STABILITY_MARGIN: f64 = 0.999;

/// Relative tolerance on `Σλ_j = λ`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Relative slack used when checking moment inequalities (Jensen) on
/// floating-point inputs.
const MOMENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("band is unstable: arrival rate {lambda} >= service rate {mu}")]
    Infeasible { lambda: f64, mu: f64 },
    #[error("invalid band statistics: {0}")]
    InvalidStats(String),
    #[error("invalid arrival rate {0}")]
    InvalidRate(f64),
    #[error("length mismatch: {allocation} rates for {bands} bands")]
    LengthMismatch { allocation: usize, bands: usize },
}

/// Identifies the AP queue `Q_{i,k}`: destination station and access category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub sta: u32,
    pub ac: u8,
}

impl FlowKey {
    pub fn new(sta: u32, ac: u8) -> Self {
        Self { sta, ac }
    }

    /// Checks `sta < stations` and `ac < 4`.
    pub fn is_valid(&self, stations: u32) -> bool {
        self.sta < stations && self.ac < ACCESS_CATEGORIES
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sta{}/ac{}", self.sta, self.ac)
    }
}

/// Measured moments of one band as seen by one queue.
///
/// The mean service time is not stored: it is always `1/mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    /// Service rate, packets/s.
    pub mu: f64,
    /// Second moment of the service time, s².
    pub x2: f64,
    /// Mean vacation time, s.
    pub vbar: f64,
    /// Second moment of the vacation time, s².
    pub v2: f64,
}

impl BandStats {
    pub fn new(mu: f64, x2: f64, vbar: f64, v2: f64) -> Result<Self, ModelError> {
        let stats = Self { mu, x2, vbar, v2 };
        stats.validate()?;
        Ok(stats)
    }

    /// Deterministic service of `1/mu` and deterministic vacations of `vacation`.
    pub fn deterministic(mu: f64, vacation: f64) -> Result<Self, ModelError> {
        Self::new(mu, 1.0 / (mu * mu), vacation, vacation * vacation)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all_finite = [self.mu, self.x2, self.vbar, self.v2]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(ModelError::InvalidStats(format!("non-finite moment in {self:?}")));
        }
        if self.mu <= 0.0 {
            return Err(ModelError::InvalidStats(format!("mu must be positive, got {}", self.mu)));
        }
        let mean_sq = 1.0 / (self.mu * self.mu);
        if self.x2 < mean_sq * (1.0 - MOMENT_SLACK) {
            return Err(ModelError::InvalidStats(format!(
                "x2 = {} below squared mean service time {}",
                self.x2, mean_sq
            )));
        }
        if self.vbar <= 0.0 {
            return Err(ModelError::InvalidStats(format!(
                "vbar must be positive, got {}",
                self.vbar
            )));
        }
        if self.v2 < self.vbar * self.vbar * (1.0 - MOMENT_SLACK) {
            return Err(ModelError::InvalidStats(format!(
                "v2 = {} below squared mean vacation {}",
                self.v2,
                self.vbar * self.vbar
            )));
        }
        Ok(())
    }

    /// Mean service time `1/μ`.
    pub fn mean_service(&self) -> f64 {
        1.0 / self.mu
    }

    /// Mean residual vacation `E[V²]/(2E[V])`, independent of load.
    pub fn residual_vacation(&self) -> f64 {
        self.v2 / (2.0 * self.vbar)
    }
}

/// Waiting, service and total sojourn time of one band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayBreakdown {
    pub waiting: f64,
    pub service: f64,
    pub total: f64,
}

/// Per-band arrival rates together with the total they were built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAllocation {
    pub lambdas: Vec<f64>,
    pub total: f64,
}

impl RateAllocation {
    pub fn new(lambdas: Vec<f64>, total: f64) -> Self {
        Self { lambdas, total }
    }

    /// Builds an allocation whose target total is the sum of its parts.
    pub fn from_rates(lambdas: Vec<f64>) -> Self {
        let total = lambdas.iter().sum();
        Self { lambdas, total }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Share of the total carried by each band.
    pub fn fractions(&self) -> Vec<f64> {
        let sum = self.sum();
        self.lambdas.iter().map(|l| l / sum).collect()
    }

    /// Even split of `total` over `bands` bands.
    pub fn even(total: f64, bands: usize) -> Self {
        Self::new(vec![total / bands as f64; bands], total)
    }

    /// Split proportional to the service rates.
    pub fn proportional(total: f64, stats: &[BandStats]) -> Self {
        let mu_sum: f64 = stats.iter().map(|s| s.mu).sum();
        Self::new(stats.iter().map(|s| total * s.mu / mu_sum).collect(), total)
    }

    /// Like [`feasible`], but bands carrying exactly zero are allowed.
    ///
    /// Optimal allocations may switch a band off entirely when it is too slow
    /// to be worth using.
    pub fn is_feasible_on_support(&self, stats: &[BandStats]) -> bool {
        if self.len() != stats.len() || !sum_matches(self.sum(), self.total) {
            return false;
        }
        let mut any_active = false;
        for (lambda, s) in self.lambdas.iter().zip(stats) {
            if *lambda == 0.0 {
                continue;
            }
            if !(*lambda > 0.0 && *lambda < s.mu) {
                return false;
            }
            any_active = true;
        }
        any_active
    }
}

/// Offered load of one queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub lambda_total: f64,
    pub flow: FlowKey,
}

impl TrafficSpec {
    pub fn new(lambda_total: f64, flow: FlowKey) -> Result<Self, ModelError> {
        if !(lambda_total > 0.0 && lambda_total.is_finite()) {
            return Err(ModelError::InvalidRate(lambda_total));
        }
        Ok(Self { lambda_total, flow })
    }
}

fn sum_matches(sum: f64, total: f64) -> bool {
    (sum - total).abs() <= SUM_TOLERANCE * total.abs().max(f64::MIN_POSITIVE)
}

/// Sojourn time of one band at arrival rate `lambda`.
///
/// `lambda = 0` is accepted and yields the zero-load limit, where only the
/// residual vacation and the service time remain.
pub fn band_delay(lambda: f64, stats: &BandStats) -> Result<DelayBreakdown, ModelError> {
    stats.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ModelError::InvalidRate(lambda));
    }
    if lambda >= stats.mu {
        return Err(ModelError::Infeasible {
            lambda,
            mu: stats.mu,
        });
    }
    let rho = lambda / stats.mu;
    let waiting = lambda * stats.x2 / (2.0 * (1.0 - rho)) + stats.residual_vacation();
    let service = stats.mean_service();
    Ok(DelayBreakdown {
        waiting,
        service,
        total: waiting + service,
    })
}

/// Arrival-weighted mean sojourn time over all bands.
pub fn aggregate_delay(alloc: &RateAllocation, stats: &[BandStats]) -> Result<f64, ModelError> {
    if alloc.len() != stats.len() {
        return Err(ModelError::LengthMismatch {
            allocation: alloc.len(),
            bands: stats.len(),
        });
    }
    let mut weighted = 0.0;
    let mut sum = 0.0;
    for (lambda, s) in alloc.lambdas.iter().zip(stats) {
        let delay = band_delay(*lambda, s)?;
        weighted += delay.total * lambda;
        sum += lambda;
    }
    if sum <= 0.0 {
        return Err(ModelError::InvalidRate(sum));
    }
    Ok(weighted / sum)
}

/// One term of the separable objective: `T_j(λ_j)·λ_j/λ`.
pub fn band_objective_term(lambda: f64, stats: &BandStats, lambda_total: f64) -> Result<f64, ModelError> {
    Ok(band_delay(lambda, stats)?.total * lambda / lambda_total)
}

/// Strict feasibility: the sum matches the target total and every band has
/// `0 < λ_j < μ_j`.
pub fn feasible(alloc: &RateAllocation, stats: &[BandStats]) -> bool {
    alloc.len() == stats.len()
        && !alloc.is_empty()
        && sum_matches(alloc.sum(), alloc.total)
        && alloc
            .lambdas
            .iter()
            .zip(stats)
            .all(|(lambda, s)| *lambda > 0.0 && *lambda < s.mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn band_delay_hand_evaluation() {
        let stats = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        let d = band_delay(5.0, &stats).unwrap();
        assert!(close(d.waiting, 0.225, 1e-12));
        assert!(close(d.service, 0.1, 1e-12));
        assert!(close(d.total, 0.325, 1e-12));
    }

    #[test]
    fn zero_arrivals_leave_vacation_and_service() {
        let stats = BandStats::new(10.0, 0.02, 0.2, 0.04).unwrap();
        let d = band_delay(0.0, &stats).unwrap();
        assert!(close(d.waiting, 0.1, 1e-12));
        assert!(close(d.total, 0.2, 1e-12));
    }

    #[test]
    fn saturated_band_is_infeasible() {
        let stats = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        assert!(matches!(
            band_delay(10.0, &stats),
            Err(ModelError::Infeasible { .. })
        ));
        assert!(matches!(band_delay(-1.0, &stats), Err(ModelError::InvalidRate(_))));
    }

    #[test]
    fn invalid_stats_are_rejected() {
        assert!(BandStats::new(0.0, 0.02, 0.2, 0.05).is_err());
        // E[X²] < E[X]²
        assert!(BandStats::new(10.0, 0.005, 0.2, 0.05).is_err());
        assert!(BandStats::new(10.0, 0.02, 0.0, 0.05).is_err());
        // E[V²] < E[V]²
        assert!(BandStats::new(10.0, 0.02, 0.2, 0.03).is_err());
        let bad = BandStats {
            mu: 10.0,
            x2: f64::NAN,
            vbar: 0.2,
            v2: 0.05,
        };
        assert!(matches!(band_delay(1.0, &bad), Err(ModelError::InvalidStats(_))));
    }

    #[test]
    fn aggregate_of_symmetric_split_is_band_total() {
        let stats = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        let f = aggregate_delay(&RateAllocation::from_rates(vec![5.0, 5.0]), &[stats, stats]).unwrap();
        assert!(close(f, 0.325, 1e-12));
    }

    #[test]
    fn aggregate_of_single_band_is_band_total() {
        let stats = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        let f = aggregate_delay(&RateAllocation::from_rates(vec![5.0]), &[stats]).unwrap();
        assert_eq!(f, band_delay(5.0, &stats).unwrap().total);
    }

    #[test]
    fn aggregate_weighted_mean_matches_exact_expansion() {
        // Exact rational evaluation: T_a(4) = 7/24, T_b(8) = 91/300,
        // F = (4·7/24 + 8·91/300)/12 = 539/1800.
        let a = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        let b = BandStats::new(12.0, 0.01, 0.1, 0.02).unwrap();
        let f = aggregate_delay(&RateAllocation::from_rates(vec![4.0, 8.0]), &[a, b]).unwrap();
        assert!(close(f, 539.0 / 1800.0, 1e-12), "{f}");
    }

    #[test]
    fn aggregate_rejects_length_mismatch() {
        let s = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        assert!(matches!(
            aggregate_delay(&RateAllocation::from_rates(vec![1.0, 1.0]), &[s]),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn feasibility_is_strict() {
        let s = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        assert!(feasible(&RateAllocation::new(vec![5.0, 5.0], 10.0), &[s, s]));
        assert!(!feasible(&RateAllocation::new(vec![10.0, 0.0], 10.0), &[s, s]));
        assert!(!feasible(&RateAllocation::new(vec![6.0, 5.0], 10.0), &[s, s]));
        assert!(!feasible(&RateAllocation::new(vec![5.0], 5.0), &[s, s]));
    }

    #[test]
    fn support_feasibility_admits_switched_off_bands() {
        let s = BandStats::new(10.0, 0.02, 0.2, 0.05).unwrap();
        let alloc = RateAllocation::new(vec![8.0, 0.0], 8.0);
        assert!(!feasible(&alloc, &[s, s]));
        assert!(alloc.is_feasible_on_support(&[s, s]));
        assert!(!RateAllocation::new(vec![0.0, 0.0], 0.0).is_feasible_on_support(&[s, s]));
    }

    #[test]
    fn deterministic_vacation_adds_half_its_length() {
        let v = 0.3;
        let stats = BandStats::deterministic(10.0, v).unwrap();
        let lambda = 4.0;
        let pk = lambda * stats.x2 / (2.0 * (1.0 - lambda / stats.mu));
        let d = band_delay(lambda, &stats).unwrap();
        assert!(close(d.waiting - pk, v / 2.0, 1e-12));
    }

    #[test]
    fn flow_key_bounds() {
        assert!(FlowKey::new(1, 3).is_valid(2));
        assert!(!FlowKey::new(2, 0).is_valid(2));
        assert!(!FlowKey::new(0, 4).is_valid(2));
        assert!(TrafficSpec::new(0.0, FlowKey::new(0, 0)).is_err());
    }
}
