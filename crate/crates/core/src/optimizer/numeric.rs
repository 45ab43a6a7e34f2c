use crate::model::{aggregate_delay, BandStats, RateAllocation};

use super::closed_form::{gamma_approx, radicand};
use super::{check_instance, LagrangeSolution, Method, OptimizerConfig, OptimizerError, Sign};

const MAX_DOUBLINGS: u32 = 60;
const MAX_BISECTIONS: usize = 400;

/// Minus-branch rate of one band at multiplier `gamma`, clamped at zero.
///
/// Below its activation multiplier `(E[V²]/(2E[V]) + 1/μ_j)/λ` a band's
/// unconstrained rate is negative (or undefined once the radicand turns
/// non-positive); such bands are switched off.
fn clamped_rate(gamma: f64, s: &BandStats, lambda_total: f64) -> f64 {
    let r = radicand(gamma, s, lambda_total);
    if !(r > 0.0) {
        return 0.0;
    }
    let rate = s.mu - s.mu * s.mu * (s.vbar * s.x2).sqrt() / r.sqrt();
    rate.max(0.0)
}

fn excess(gamma: f64, stats: &[BandStats], lambda_total: f64) -> f64 {
    stats.iter().map(|s| clamped_rate(gamma, s, lambda_total)).sum::<f64>() - lambda_total
}

/// Exact multiplier by bisection on `g(γ) = Σ_j max(0, λ_j(γ)) − λ`.
///
/// Each minus-branch `λ_j(γ)` is non-decreasing in `γ`, so `g` is monotone and
/// has a single root. Clamping at zero is the active-set rule: a band whose
/// rate would be negative at the root is excluded and the remaining bands
/// share `λ`, which is exactly what the clamped sum solves.
pub fn solve_numeric(
    lambda_total: f64,
    stats: &[BandStats],
    cfg: &OptimizerConfig,
) -> Result<LagrangeSolution, OptimizerError> {
    cfg.validate()?;
    check_instance(lambda_total, stats)?;

    let (mut lo, mut hi) = match cfg.gamma_bracket {
        Some(bracket) => bracket,
        None => {
            let activation = stats
                .iter()
                .map(|s| (s.residual_vacation() + s.mean_service()) / lambda_total)
                .fold(f64::INFINITY, f64::min);
            let mus: Vec<f64> = stats.iter().map(|s| s.mu).collect();
            let start = gamma_approx(lambda_total, &mus)?;
            (1e-12_f64.min(0.5 * activation), start.max(activation))
        }
    };

    if excess(lo, stats, lambda_total) > 0.0 {
        return Err(OptimizerError::BracketFailure { doublings: 0 });
    }
    let mut doublings = 0;
    while excess(hi, stats, lambda_total) < 0.0 {
        if doublings == MAX_DOUBLINGS {
            return Err(OptimizerError::BracketFailure { doublings });
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }

    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= cfg.tolerance * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if excess(mid, stats, lambda_total) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut rates: Vec<f64> = stats.iter().map(|s| clamped_rate(hi, s, lambda_total)).collect();
    // Remove the bisection residual so the sum constraint holds to rounding.
    let sum: f64 = rates.iter().sum();
    if !(sum > 0.0) {
        return Err(OptimizerError::NoFeasibleBranch);
    }
    for r in rates.iter_mut() {
        *r *= lambda_total / sum;
    }
    let alloc = RateAllocation::new(rates, lambda_total);
    if !alloc.is_feasible_on_support(stats) {
        return Err(OptimizerError::NoFeasibleBranch);
    }
    let objective = aggregate_delay(&alloc, stats)?;
    Ok(LagrangeSolution {
        gamma: 0.5 * (lo + hi),
        alloc,
        objective,
        branch: vec![Sign::Minus; stats.len()],
        method: Method::NumericGamma,
    })
}
