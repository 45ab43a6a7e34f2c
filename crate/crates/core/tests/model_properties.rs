mod common;

use bandsplit_core::model::{aggregate_delay, band_delay, feasible};
use bandsplit_core::scheduler::{AvailabilityMask, TokenRule, TokenState, TOKEN_EPSILON};
use bandsplit_core::RateAllocation;
use proptest::prelude::*;

proptest! {
    #[test]
    fn delay_grows_with_load(s in common::band(), a in 0.0f64..0.99, b in 0.0f64..0.99) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let d_lo = band_delay(lo * s.mu, &s).unwrap();
        let d_hi = band_delay(hi * s.mu, &s).unwrap();
        prop_assert!(d_lo.total <= d_hi.total);
        prop_assert!(d_lo.total >= s.residual_vacation() + s.mean_service() - 1e-15);
        prop_assert!((d_lo.total - d_lo.waiting - d_lo.service).abs() < 1e-15);
    }

    #[test]
    fn aggregate_is_rate_weighted((stats, lambda) in common::instance(1..=5), w in prop::collection::vec(0.01f64..1.0, 5)) {
        let raw: Vec<f64> = stats.iter().zip(&w).map(|(s, w)| w * s.mu).collect();
        let sum: f64 = raw.iter().sum();
        let scale = (lambda / sum).min(0.99);
        let lambdas: Vec<f64> = raw.iter().map(|r| r * scale).collect();
        let total: f64 = lambdas.iter().sum();
        let alloc = RateAllocation::new(lambdas.clone(), total);
        prop_assert!(feasible(&alloc, &stats));
        let f = aggregate_delay(&alloc, &stats).unwrap();
        let direct: f64 = lambdas.iter().zip(&stats).map(|(l, s)| band_delay(*l, s).unwrap().total * l).sum::<f64>() / total;
        prop_assert!((f - direct).abs() <= 1e-12 * f);
        let min = stats.iter().zip(&lambdas).map(|(s, l)| band_delay(*l, s).unwrap().total).fold(f64::MAX, f64::min);
        let max = stats.iter().zip(&lambdas).map(|(s, l)| band_delay(*l, s).unwrap().total).fold(f64::MIN, f64::max);
        prop_assert!(f >= min * (1.0 - 1e-12) && f <= max * (1.0 + 1e-12));
    }

    #[test]
    fn tokens_stay_bounded_and_track_shares(w in prop::collection::vec(0.0f64..1.0, 2..=5)) {
        let sum: f64 = w.iter().sum();
        prop_assume!(sum > 1e-3);
        let shares: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let mut tokens = TokenState::with_increments(shares.clone());
        let mask = AvailabilityMask::all(shares.len());
        let max_r = shares.iter().cloned().fold(0.0, f64::max);
        let mut counts = vec![0u64; shares.len()];
        let n = 20_000u64;
        for _ in 0..n {
            let j = tokens.select(&mask).unwrap();
            counts[j] += 1;
            for t in tokens.tokens() {
                prop_assert!(*t >= -1.0 - TOKEN_EPSILON && *t < 1.0 + max_r + TOKEN_EPSILON);
            }
        }
        for (c, s) in counts.iter().zip(&shares) {
            prop_assert!((*c as f64 - n as f64 * s).abs() <= shares.len() as f64 + 1.0);
        }
        prop_assert_eq!(tokens.rule(), TokenRule::Share);
    }
}
