use std::path::{Path, PathBuf};

use cbsa::harness::{load_scenario, run_scenario, RunOptions, ScenarioError, StopReason};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn example_scenarios_load() {
    for name in ["reference", "es_no_margin", "mc_feasible", "mc_tight", "mc_infeasible"] {
        load_scenario(&dir().join(format!("{name}.json"))).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn each_invalid_fixture_names_its_assumption() {
    let mut seen = 0;
    for entry in std::fs::read_dir(dir().join("invalid")).unwrap() {
        let path = entry.unwrap().path();
        let expected = path.file_stem().unwrap().to_str().unwrap().to_string();
        match load_scenario(&path) {
            Err(ScenarioError::Validation { issues, .. }) => {
                assert!(
                    issues.iter().any(|i| i.assumption == expected),
                    "{expected}: got {:?}",
                    issues.iter().map(|i| i.assumption).collect::<Vec<_>>()
                );
            }
            other => panic!("{expected}: expected a validation error, got {other:?}"),
        }
        seen += 1;
    }
    assert_eq!(seen, 17);
}

#[test]
fn missing_file_and_bad_json_are_distinguished() {
    assert!(matches!(load_scenario(&dir().join("nope.json")), Err(ScenarioError::Io { .. })));
    let tmp = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(tmp.path(), "{ \"name\": ").unwrap();
    assert!(matches!(load_scenario(tmp.path()), Err(ScenarioError::Parse { .. })));
}

#[test]
fn infeasible_deadline_switches_immediately() {
    let s = load_scenario(&dir().join("mc_infeasible.json")).unwrap();
    let r = run_scenario(&s, &RunOptions::default()).unwrap();
    let first = r.events_of("switch").next().expect("a switch");
    assert_eq!(first.tick, 0);
    assert_eq!(first.detail["to"], "BC");
    assert!(r.violated("mc"));
}

#[test]
fn violations_are_recorded_and_the_run_continues() {
    let s = load_scenario(&dir().join("es_no_margin.json")).unwrap();
    let full = run_scenario(&s, &RunOptions::default()).unwrap();
    assert!(full.violated("es"));
    assert!(full.violation_counts["es"] > 1);

    let fast = run_scenario(&s, &RunOptions { fail_fast: true, ..RunOptions::default() }).unwrap();
    assert_eq!(fast.stop, StopReason::Violation);
    assert!(fast.ticks < full.ticks);
    assert_eq!(fast.violations.len(), 1);
}

#[test]
fn tick_override_caps_the_run() {
    let s = load_scenario(&dir().join("reference.json")).unwrap();
    let r = run_scenario(&s, &RunOptions { max_ticks: Some(25), ..RunOptions::default() }).unwrap();
    assert_eq!(r.stop, StopReason::MaxTicks);
    assert_eq!(r.ticks, 25);
}
