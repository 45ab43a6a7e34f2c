use std::path::Path;
use std::process::Command;

use bandsplit_cli::{compare, load_scenario, read_records, run_suite, write_records, Format};
use bandsplit_core::config::{scenarios, ConfigError, ScenarioConfig, SchedulerSet};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bandsplit"))
}

fn bundled(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

#[test]
fn bundled_files_match_builtins() {
    for name in scenarios::NAMES {
        let from_file = ScenarioConfig::from_path(&bundled(name)).unwrap();
        assert_eq!(Some(from_file), scenarios::builtin(name), "{name}");
    }
}

#[test]
fn builtin_name_resolves_without_file() {
    let cfg = load_scenario("two_sta_mixed").unwrap();
    assert_eq!(cfg.name, "two_sta_mixed");
    assert!(matches!(load_scenario("/nonexistent/x.json"), Err(ConfigError::Io { .. })));
}

#[test]
fn empty_flow_list_is_rejected() {
    let mut cfg = scenarios::two_band_asym();
    cfg.flows.clear();
    let err = ScenarioConfig::from_json(&cfg.to_json()).unwrap_err();
    assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "flows"), "{err}");
}

#[test]
fn suite_covers_every_scheduler_and_seed() {
    let cfg = scenarios::two_band_asym();
    let seeds = cfg.seeds();
    assert_eq!(seeds.len(), 10);
    let records = run_suite(&cfg, &seeds, 2).unwrap();
    assert_eq!(records.len(), 70);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r.seed, seeds[i % 10]);
        assert_eq!(r.band_frac.len(), 2);
    }
    let c = compare(&records, "minimum_delay").unwrap();
    assert!(c.violations.is_empty(), "{}", c.render());
}

#[test]
fn records_round_trip_through_both_formats() {
    let mut cfg = scenarios::two_sta_mixed();
    cfg.replications = 2;
    let records = run_suite(&cfg, &cfg.seeds(), 1).unwrap();
    for format in [Format::Csv, Format::Json] {
        let mut buf = Vec::new();
        write_records(&records, format, &mut buf).unwrap();
        let back = read_records(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, records);
    }
}

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| {
        let path = dir.path().join(name);
        let status = bin()
            .args(["run", "two_band_asym", "--seeds", "1", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = out("a.csv");
    assert_eq!(a, out("b.csv"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 8);
}

#[test]
fn compare_reports_against_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let status = bin()
        .args(["run", "two_band_asym", "--seeds", "1", "--format", "json", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let out = bin().arg("compare").arg(&path).args(["--baseline", "even_split"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("baseline: even_split"));
    assert!(text.contains("leaky_bucket"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "x", "bands": []}"#).unwrap();
    assert_eq!(bin().arg("run").arg(&bad).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["scenario", "nope"]).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["run", "two_band_asym", "--seeds", "0"]).status().unwrap().code(), Some(2));

    let mut overloaded = scenarios::two_band_asym();
    overloaded.queue_cap = 50;
    overloaded.schedulers = SchedulerSet::List(vec!["single_band:1".parse().unwrap()]);
    overloaded.replications = 1;
    let path = dir.path().join("over.json");
    std::fs::write(&path, overloaded.to_json()).unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn scenario_listing() {
    let out = bin().arg("scenario").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), scenarios::NAMES);
    let out = bin().args(["scenario", "two_band_high_rtt"]).output().unwrap();
    let cfg = ScenarioConfig::from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(Some(cfg), scenarios::builtin("two_band_high_rtt"));
}
