//! Replications of every configured policy over a set of seeds.

use bandsplit_core::config::ScenarioConfig;
use bandsplit_core::sim::{run, SimError};
use bandsplit_core::SchedulerKind;
use rayon::prelude::*;
use thiserror::Error;

use crate::record::RunRecord;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{scheduler} with seed {seed}: {source}")]
    Run {
        scheduler: SchedulerKind,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs `|schedulers| × |seeds|` simulations on `jobs` worker threads.
///
/// Records come back ordered by scheduler (config order) then seed,
/// whatever order the runs finish in.
pub fn run_suite(cfg: &ScenarioConfig, seeds: &[u64], jobs: usize) -> Result<Vec<RunRecord>, SuiteError> {
    let tasks: Vec<(SchedulerKind, u64)> = cfg
        .schedulers()
        .into_iter()
        .flat_map(|k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(scheduler, seed)| {
                run(cfg, scheduler, seed)
                    .map(|report| RunRecord::new(&cfg.name, &scheduler.to_string(), seed, &report))
                    .map_err(|source| SuiteError::Run { scheduler, seed, source })
            })
            .collect()
    })
}
