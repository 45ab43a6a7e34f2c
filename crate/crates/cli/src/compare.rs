//! Paired-seed comparison of policies against a baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use bandsplit_core::SchedulerKind;
use thiserror::Error;

use crate::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("scenario `{scenario}`: `{scheduler}` and the baseline do not share a seed set")]
    MismatchedSeeds { scenario: String, scheduler: String },
    #[error("no records")]
    Empty,
}

/// `scheduler − baseline` for one metric over paired seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedDelta {
    pub scenario: String,
    pub scheduler: String,
    pub metric: &'static str,
    pub deltas: Vec<(u64, f64)>,
    pub mean_delta: f64,
    pub mean_scheduler: f64,
    pub mean_baseline: f64,
    /// Seeds where the scheduler's value is strictly below the baseline's.
    pub below: usize,
}

/// An expected ordering between policies that the records break.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub scenario: String,
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub deltas: Vec<PairedDelta>,
    pub violations: Vec<Violation>,
}

type BySeed<'a> = BTreeMap<u64, &'a RunRecord>;

fn group(records: &[RunRecord]) -> BTreeMap<&str, BTreeMap<&str, BySeed<'_>>> {
    let mut out: BTreeMap<&str, BTreeMap<&str, BySeed<'_>>> = BTreeMap::new();
    for r in records {
        out.entry(r.scenario.as_str())
            .or_default()
            .entry(r.scheduler.as_str())
            .or_default()
            .entry(r.seed)
            .or_insert(r);
    }
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn compare(records: &[RunRecord], baseline: &str) -> Result<Comparison, CompareError> {
    if records.is_empty() {
        return Err(CompareError::Empty);
    }
    let groups = group(records);
    let mut deltas = Vec::new();
    let mut violations = Vec::new();
    for (scenario, schemes) in &groups {
        let base = schemes.get(baseline);
        let others: Vec<(&&str, &BySeed)> = schemes.iter().filter(|(k, _)| **k != baseline).collect();
        let Some(base) = base.filter(|_| !others.is_empty()) else {
            return Err(CompareError::MismatchedSeeds {
                scenario: scenario.to_string(),
                scheduler: schemes.keys().next().map_or(String::new(), |k| k.to_string()),
            });
        };
        for (name, runs) in others {
            if !runs.keys().eq(base.keys()) {
                return Err(CompareError::MismatchedSeeds {
                    scenario: scenario.to_string(),
                    scheduler: name.to_string(),
                });
            }
            let metric_count = base.values().next().map_or(0, |r| r.metrics().len());
            for m in 0..metric_count {
                let pairs: Vec<(u64, f64, f64)> = runs
                    .iter()
                    .map(|(seed, r)| (*seed, r.metrics()[m].1, base[seed].metrics()[m].1))
                    .collect();
                deltas.push(PairedDelta {
                    scenario: scenario.to_string(),
                    scheduler: name.to_string(),
                    metric: base.values().next().unwrap().metrics()[m].0,
                    deltas: pairs.iter().map(|(s, a, b)| (*s, a - b)).collect(),
                    mean_delta: mean(pairs.iter().map(|(_, a, b)| a - b)),
                    mean_scheduler: mean(pairs.iter().map(|p| p.1)),
                    mean_baseline: mean(pairs.iter().map(|p| p.2)),
                    below: pairs.iter().filter(|(_, a, b)| a < b).count(),
                });
            }
        }
        violations.extend(ordering_violations(scenario, schemes));
    }
    Ok(Comparison {
        baseline: baseline.to_string(),
        deltas,
        violations,
    })
}

/// Checks the orderings expected between policies:
/// the leaky bucket resequences less than the minimum-delay split in at
/// least 90% of paired seeds and has no higher mean latency than the even
/// split or load balancing; single-band runs never reorder and aggregating
/// runs always do.
pub fn ordering_violations(scenario: &str, schemes: &BTreeMap<&str, BySeed<'_>>) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut flag = |rule: &str, detail: String| {
        out.push(Violation {
            scenario: scenario.to_string(),
            rule: rule.to_string(),
            detail,
        })
    };
    let leaky = schemes.get("leaky_bucket");
    if let (Some(lb), Some(md)) = (leaky, schemes.get("minimum_delay")) {
        let paired: Vec<(f64, f64)> = lb
            .iter()
            .filter_map(|(s, r)| md.get(s).map(|m| (r.mean_reseq_delay_s, m.mean_reseq_delay_s)))
            .collect();
        let wins = paired.iter().filter(|(a, b)| a < b).count();
        if wins * 10 < paired.len() * 9 {
            flag(
                "reseq: leaky_bucket < minimum_delay",
                format!("held in {wins} of {} paired seeds", paired.len()),
            );
        }
    }
    if let Some(lb) = leaky {
        let lb_mean = mean(lb.values().map(|r| r.mean_latency_s));
        for other in ["even_split", "load_balancing"] {
            if let Some(o) = schemes.get(other) {
                let o_mean = mean(o.values().map(|r| r.mean_latency_s));
                if lb_mean > o_mean {
                    flag(
                        &format!("latency: leaky_bucket <= {other}"),
                        format!("{lb_mean:.6e} s vs {o_mean:.6e} s"),
                    );
                }
            }
        }
    }
    for (name, runs) in schemes {
        let kind = name.parse::<SchedulerKind>().ok();
        for (seed, r) in runs {
            match kind {
                Some(SchedulerKind::SingleBand(_)) if r.out_of_order_frac != 0.0 => flag(
                    "out of order: single band = 0",
                    format!("{name} seed {seed}: {}", r.out_of_order_frac),
                ),
                Some(k) if k.aggregates() && r.out_of_order_frac <= 0.0 => flag(
                    "out of order: aggregation > 0",
                    format!("{name} seed {seed}: {}", r.out_of_order_frac),
                ),
                _ => {}
            }
        }
    }
    out
}

impl Comparison {
    /// Plain-text summary table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "baseline: {}", self.baseline);
        let _ = writeln!(
            s,
            "{:<20} {:<16} {:<20} {:>14} {:>14} {:>14} {:>7}",
            "scenario", "scheduler", "metric", "mean", "baseline", "mean delta", "below"
        );
        for d in &self.deltas {
            let _ = writeln!(
                s,
                "{:<20} {:<16} {:<20} {:>14.6e} {:>14.6e} {:>14.6e} {:>3}/{:<3}",
                d.scenario,
                d.scheduler,
                d.metric,
                d.mean_scheduler,
                d.mean_baseline,
                d.mean_delta,
                d.below,
                d.deltas.len()
            );
        }
        if self.violations.is_empty() {
            let _ = writeln!(s, "ordering: no violations");
        } else {
            for v in &self.violations {
                let _ = writeln!(s, "VIOLATION [{}] {}: {}", v.scenario, v.rule, v.detail);
            }
        }
        s
    }
}
