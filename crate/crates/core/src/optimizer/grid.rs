use crate::model::{aggregate_delay, BandStats, RateAllocation};

use super::{check_instance, marginal_delay, LagrangeSolution, Method, OptimizerConfig, OptimizerError, Sign};

pub const MAX_GRID_BANDS: usize = 4;

/// Half-width of the refinement window, in current grid steps.
const WINDOW_STEPS: f64 = 16.0;
const MAX_LEVELS: usize = 200;

/// Exhaustive search over the simplex `Σλ_j = λ, 0 ≤ λ_j < μ_j`.
///
/// The first level enumerates every composition of `grid_resolution` into
/// `M` parts. Each further level re-grids a window around the incumbent with
/// a finer step until the step falls below `tolerance·λ`. Bands may sit at
/// exactly zero so that boundary optima are reachable.
///
/// Only objective values are compared; the stationarity conditions used by
/// the other solvers are never evaluated.
pub fn solve_grid(lambda_total: f64, stats: &[BandStats], cfg: &OptimizerConfig) -> Result<LagrangeSolution, OptimizerError> {
    cfg.validate()?;
    if stats.len() > MAX_GRID_BANDS {
        return Err(OptimizerError::DimensionTooLarge {
            bands: stats.len(),
            max: MAX_GRID_BANDS,
        });
    }
    check_instance(lambda_total, stats)?;

    let m = stats.len();
    let n = cfg.grid_resolution;
    let eval = |rates: &[f64]| -> Option<f64> {
        if rates.iter().zip(stats).any(|(r, s)| *r < 0.0 || *r >= s.mu) {
            return None;
        }
        aggregate_delay(&RateAllocation::new(rates.to_vec(), lambda_total), stats).ok()
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let consider = |rates: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if let Some(f) = eval(&rates) {
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                *best = Some((f, rates));
            }
        }
    };

    // Level 0: all compositions of n into m non-negative parts.
    let mut parts = vec![0usize; m];
    compositions(n, &mut parts, 0, &mut |k| {
        let rates: Vec<f64> = k.iter().map(|&ki| lambda_total * ki as f64 / n as f64).collect();
        consider(rates, &mut best);
    });

    let mut step = lambda_total / n as f64;
    if m > 1 {
        for _ in 0..MAX_LEVELS {
            if step <= cfg.tolerance * lambda_total {
                break;
            }
            let center = match &best {
                Some((_, rates)) => rates.clone(),
                None => break,
            };
            let half = WINDOW_STEPS * step;
            let axes: Vec<Vec<f64>> = (0..m - 1)
                .map(|j| {
                    let lo = (center[j] - half).max(0.0);
                    let hi = (center[j] + half).min(stats[j].mu).min(lambda_total);
                    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
                })
                .collect();
            let mut index = vec![0usize; m - 1];
            loop {
                let mut rates = Vec::with_capacity(m);
                let mut partial = 0.0;
                for (axis, &i) in axes.iter().zip(&index) {
                    rates.push(axis[i]);
                    partial += axis[i];
                }
                let last = lambda_total - partial;
                if last >= 0.0 {
                    rates.push(last);
                    consider(rates, &mut best);
                }
                if !advance(&mut index, n + 1) {
                    break;
                }
            }
            step = 2.0 * half / n as f64;
        }
    }

    let (objective, rates) = best.ok_or(OptimizerError::NoFeasibleBranch)?;
    let active: Vec<usize> = (0..m).filter(|&j| rates[j] > 0.0).collect();
    let gamma = active
        .iter()
        .map(|&j| marginal_delay(rates[j], &stats[j], lambda_total))
        .sum::<f64>()
        / active.len() as f64;
    Ok(LagrangeSolution {
        gamma,
        alloc: RateAllocation::new(rates, lambda_total),
        objective,
        branch: vec![Sign::Minus; m],
        method: Method::GridFallback,
    })
}

fn compositions(remaining: usize, parts: &mut [usize], pos: usize, visit: &mut dyn FnMut(&[usize])) {
    if pos + 1 == parts.len() {
        parts[pos] = remaining;
        visit(parts);
        return;
    }
    for k in 0..=remaining {
        parts[pos] = k;
        compositions(remaining - k, parts, pos + 1, visit);
    }
}

/// Odometer increment; returns `false` after the last index.
fn advance(index: &mut [usize], radix: usize) -> bool {
    for digit in index.iter_mut().rev() {
        *digit += 1;
        if *digit < radix {
            return true;
        }
        *digit = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_count() {
        let mut count = 0;
        compositions(10, &mut [0; 3], 0, &mut |k| {
            assert_eq!(k.iter().sum::<usize>(), 10);
            count += 1;
        });
        // C(12, 2)
        assert_eq!(count, 66);
    }

    #[test]
    fn single_band_takes_everything() {
        let s = BandStats::new(10.0, 0.02, 0.1, 0.02).unwrap();
        let sol = solve_grid(4.0, &[s], &OptimizerConfig::default()).unwrap();
        assert_eq!(sol.alloc.lambdas, vec![4.0]);
        assert_eq!(sol.method, Method::GridFallback);
    }

    #[test]
    fn symmetric_pair_lands_on_midpoint() {
        let s = BandStats::new(10.0, 0.02, 0.1, 0.02).unwrap();
        let sol = solve_grid(8.0, &[s, s], &OptimizerConfig::default()).unwrap();
        assert!((sol.alloc.lambdas[0] - 4.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_too_many_bands() {
        let s = BandStats::new(10.0, 0.02, 0.1, 0.02).unwrap();
        assert!(matches!(
            solve_grid(8.0, &[s; 5], &OptimizerConfig::default()),
            Err(OptimizerError::DimensionTooLarge { bands: 5, .. })
        ));
    }
}
