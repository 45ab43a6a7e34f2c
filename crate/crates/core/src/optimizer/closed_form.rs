use crate::model::{aggregate_delay, feasible, BandStats, RateAllocation};

use super::{check_instance, solve_numeric, LagrangeSolution, Method, OptimizerConfig, OptimizerError, Sign};

/// Branch enumeration is skipped beyond this many bands; only the all-minus
/// branch can be feasible anyway.
const MAX_ENUMERATED_BANDS: usize = 16;

/// Approximate multiplier for the heavy-load regime `2λ ≫ μ_j`:
///
/// ```text
/// γ ≈ (Σ_j μ_j^{3/2})² / (2λ (Σ_j μ_j − λ)²)
/// ```
///
/// With a uniform sign the `∓` in front of each term squares away.
pub fn gamma_approx(lambda_total: f64, mus: &[f64]) -> Result<f64, OptimizerError> {
    if mus.is_empty() {
        return Err(OptimizerError::NoBands);
    }
    if mus.iter().any(|mu| !(*mu > 0.0)) {
        return Err(crate::model::ModelError::InvalidStats("service rates must be positive".into()).into());
    }
    let mu_sum: f64 = mus.iter().sum();
    if lambda_total >= mu_sum {
        return Err(OptimizerError::Overload {
            lambda: lambda_total,
            capacity: mu_sum,
        });
    }
    let numerator: f64 = mus.iter().map(|mu| mu.powf(1.5)).sum();
    let slack = mu_sum - lambda_total;
    Ok(numerator * numerator / (2.0 * lambda_total * slack * slack))
}

/// Per-band rates solving `∂F/∂λ_j = γ` for a given multiplier:
///
/// ```text
/// λ_j = μ_j ± μ_j² √(V̄_j X̄²_j) / √(μ_j² V̄_j X̄²_j − μ_j V̄²_j + (2λγμ_j − 2) V̄_j)
/// ```
///
/// The result is not checked for feasibility.
pub fn lambda_star_given_gamma(
    gamma: f64,
    stats: &[BandStats],
    lambda_total: f64,
    branch: &[Sign],
) -> Result<Vec<f64>, OptimizerError> {
    assert_eq!(stats.len(), branch.len(), "one sign per band");
    stats
        .iter()
        .zip(branch)
        .enumerate()
        .map(|(band, (s, sign))| {
            let radicand = radicand(gamma, s, lambda_total);
            if !(radicand > 0.0) {
                return Err(OptimizerError::BranchInvalid { band });
            }
            let offset = s.mu * s.mu * (s.vbar * s.x2).sqrt() / radicand.sqrt();
            Ok(s.mu + sign.value() * offset)
        })
        .collect()
}

pub(super) fn radicand(gamma: f64, s: &BandStats, lambda_total: f64) -> f64 {
    s.mu * s.mu * s.vbar * s.x2 - s.mu * s.v2 + (2.0 * lambda_total * gamma * s.mu - 2.0) * s.vbar
}

/// Sign vectors in lexicographic order, all-minus first.
fn branches(bands: usize) -> impl Iterator<Item = Vec<Sign>> {
    let count: u64 = if bands <= MAX_ENUMERATED_BANDS { 1 << bands } else { 1 };
    (0..count).map(move |mask| {
        (0..bands)
            .map(|band| {
                if mask >> (bands - 1 - band) & 1 == 1 {
                    Sign::Plus
                } else {
                    Sign::Minus
                }
            })
            .collect()
    })
}

/// Closed-form optimum using the approximate multiplier.
///
/// When `2λ / max μ_j` is below `cfg.approx_threshold` the approximation is
/// not trusted and the exact multiplier from [`solve_numeric`] is used.
/// Otherwise every sign branch is tried in lexicographic order; candidate
/// rates are rescaled onto `Σλ_j = λ` (the approximate multiplier only meets
/// the constraint asymptotically) and the first strictly feasible one wins.
pub fn solve_closed_form(
    lambda_total: f64,
    stats: &[BandStats],
    cfg: &OptimizerConfig,
) -> Result<LagrangeSolution, OptimizerError> {
    cfg.validate()?;
    check_instance(lambda_total, stats)?;

    let mus: Vec<f64> = stats.iter().map(|s| s.mu).collect();
    let mu_max = mus.iter().cloned().fold(f64::MIN, f64::max);
    if 2.0 * lambda_total / mu_max < cfg.approx_threshold {
        return solve_numeric(lambda_total, stats, cfg);
    }

    let gamma = gamma_approx(lambda_total, &mus)?;
    for branch in branches(stats.len()) {
        let rates = match lambda_star_given_gamma(gamma, stats, lambda_total, &branch) {
            Ok(rates) => rates,
            Err(OptimizerError::BranchInvalid { .. }) => continue,
            Err(e) => return Err(e),
        };
        let sum: f64 = rates.iter().sum();
        if !(sum > 0.0) {
            continue;
        }
        let alloc = RateAllocation::new(rates.iter().map(|r| r * lambda_total / sum).collect(), lambda_total);
        if feasible(&alloc, stats) {
            let objective = aggregate_delay(&alloc, stats)?;
            return Ok(LagrangeSolution {
                gamma,
                alloc,
                objective,
                branch,
                method: Method::ClosedFormApprox,
            });
        }
    }
    Err(OptimizerError::NoFeasibleBranch)
}
