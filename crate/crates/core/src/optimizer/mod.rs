//! Optimal split of one queue's arrival rate across bands.
//!
//! The objective `F(λ_1..λ_M)` from [`crate::model::aggregate_delay`] is
//! strictly convex on the feasible set, so the stationarity conditions
//! `∂F/∂λ_j = γ` together with `Σλ_j = λ` pin the optimum. Three solvers are
//! provided:
//!
//! * [`solve_closed_form`]: the approximate multiplier from [`gamma_approx`]
//!   plugged into the per-band closed form, enumerating sign branches.
//! * [`solve_numeric`]: exact multiplier by bisection, with bands that would
//!   receive a negative rate switched off (water-filling).
//! * [`solve_grid`]: exhaustive search over a refining simplex grid. It never
//!   touches the stationarity conditions and serves as the oracle.
//!
//! [`optimize`] chains them: closed form, then numeric, then grid.

mod closed_form;
mod grid;
mod numeric;

pub use closed_form::{gamma_approx, lambda_star_given_gamma, solve_closed_form};
pub use grid::solve_grid;
pub use numeric::solve_numeric;

use std::fmt;

use thiserror::Error;

use crate::model::{BandStats, ModelError, RateAllocation, STABILITY_MARGIN};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("offered load {lambda} exceeds usable capacity {capacity}")]
    Overload { lambda: f64, capacity: f64 },
    #[error("no bands to allocate over")]
    NoBands,
    #[error("sign branch invalid: non-positive radicand on band {band}")]
    BranchInvalid { band: usize },
    #[error("no sign branch yields a feasible allocation")]
    NoFeasibleBranch,
    #[error("multiplier bracket has no sign change after {doublings} doublings")]
    BracketFailure { doublings: u32 },
    #[error("grid search supports at most {max} bands, got {bands}")]
    DimensionTooLarge { bands: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sign taken in front of the square root of the per-band closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedFormApprox,
    NumericGamma,
    GridFallback,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedFormApprox => "closed_form_approx",
            Method::NumericGamma => "numeric_gamma",
            Method::GridFallback => "grid_fallback",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeSolution {
    /// Multiplier of the sum constraint.
    pub gamma: f64,
    pub alloc: RateAllocation,
    /// `F` at `alloc`, seconds.
    pub objective: f64,
    pub branch: Vec<Sign>,
    pub method: Method,
}

impl LagrangeSolution {
    /// Bands that receive a positive rate.
    pub fn active(&self) -> Vec<bool> {
        self.alloc.lambdas.iter().map(|l| *l > 0.0).collect()
    }

    pub fn is_interior(&self) -> bool {
        self.alloc.lambdas.iter().all(|l| *l > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Grid points per dimension used by [`solve_grid`] at every level.
    pub grid_resolution: usize,
    /// Fixed multiplier bracket for [`solve_numeric`]. `None` starts from
    /// `[1e-12, gamma_approx]` and doubles the upper end.
    pub gamma_bracket: Option<(f64, f64)>,
    /// Relative width at which bisection and grid refinement stop.
    pub tolerance: f64,
    /// Minimum `2λ / max_j μ_j` for which the approximate multiplier is used.
    pub approx_threshold: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 128,
            gamma_bracket: None,
            tolerance: 1e-13,
            approx_threshold: 10.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bracket_ok = match self.gamma_bracket {
            Some((lo, hi)) => lo > 0.0 && hi > lo,
            None => true,
        };
        if self.grid_resolution < 64 || !bracket_ok || !(self.tolerance > 0.0) || !(self.approx_threshold > 0.0) {
            return Err(ModelError::InvalidStats(format!("invalid optimizer configuration {self:?}")).into());
        }
        Ok(())
    }
}

/// Checks inputs shared by every solver and returns `Σμ_j`.
pub(crate) fn check_instance(lambda: f64, stats: &[BandStats]) -> Result<f64, OptimizerError> {
    if stats.is_empty() {
        return Err(OptimizerError::NoBands);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ModelError::InvalidRate(lambda).into());
    }
    for s in stats {
        s.validate()?;
    }
    let mu_sum: f64 = stats.iter().map(|s| s.mu).sum();
    let capacity = STABILITY_MARGIN * mu_sum;
    if lambda >= capacity {
        return Err(OptimizerError::Overload { lambda, capacity });
    }
    Ok(mu_sum)
}

/// `∂F/∂λ_j` evaluated analytically at `lambda_j`.
pub fn marginal_delay(lambda_j: f64, stats: &BandStats, lambda_total: f64) -> f64 {
    let gap = stats.mu - lambda_j;
    let queueing = 0.5 * stats.mu * stats.x2 * (stats.mu * stats.mu / (gap * gap) - 1.0);
    (queueing + stats.residual_vacation() + stats.mean_service()) / lambda_total
}

/// Solves with the closed form and falls back to the numeric multiplier and
/// finally to the grid when a stage cannot produce a feasible allocation.
pub fn optimize(lambda: f64, stats: &[BandStats], cfg: &OptimizerConfig) -> Result<LagrangeSolution, OptimizerError> {
    match solve_closed_form(lambda, stats, cfg) {
        Ok(sol) => Ok(sol),
        Err(OptimizerError::NoFeasibleBranch) | Err(OptimizerError::BracketFailure { .. }) => {
            match solve_numeric(lambda, stats, cfg) {
                Ok(sol) => Ok(sol),
                Err(OptimizerError::BracketFailure { .. }) => solve_grid(lambda, stats, cfg),
                Err(e) => Err(e),
            }
        }
        Err(e) => Err(e),
    }
}
