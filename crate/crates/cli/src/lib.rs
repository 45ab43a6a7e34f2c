//! Scenario runner: replications across policies and seeds, record output
//! and paired comparisons.

pub mod compare;
pub mod record;
pub mod suite;

use std::path::Path;

use bandsplit_core::config::{scenarios, ConfigError, ScenarioConfig};

pub use compare::{compare, CompareError, Comparison};
pub use record::{read_records, write_records, Format, RunRecord};
pub use suite::{run_suite, SuiteError};

/// Loads a scenario from a JSON file, or a bundled scenario by name when no
/// such file exists.
pub fn load_scenario(spec: &str) -> Result<ScenarioConfig, ConfigError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(cfg) = scenarios::builtin(spec) {
            return Ok(cfg);
        }
    }
    ScenarioConfig::from_path(path)
}
