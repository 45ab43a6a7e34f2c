#![allow(dead_code)]

use bandsplit_core::BandStats;
use proptest::prelude::*;

/// One band with service rate in [5, 50] and moments above their minimums.
pub fn band() -> impl Strategy<Value = BandStats> {
    (5.0f64..50.0, 1.0f64..2.0, 0.01f64..0.2, 1.0f64..2.0).prop_map(|(mu, xs, vbar, vs)| BandStats {
        mu,
        x2: xs / (mu * mu),
        vbar,
        v2: vs * vbar * vbar,
    })
}

/// `bands` bands plus a total rate between 10% and 90% of capacity.
pub fn instance(bands: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Vec<BandStats>, f64)> {
    prop::collection::vec(band(), bands).prop_flat_map(|stats| {
        let cap: f64 = stats.iter().map(|s| s.mu).sum();
        (Just(stats), (0.1f64..0.9).prop_map(move |f| f * cap))
    })
}

/// Central difference of `f` at `x` with step `h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
