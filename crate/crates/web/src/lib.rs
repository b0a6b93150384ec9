//! Browser bindings for the rover simulator.
//!
//! Every entry point takes and returns JSON strings so the page needs no
//! glue beyond `JSON.parse`.

use cbsa::harness::{random_es_scenario, random_mc_scenario, run_scenario, RunOptions, Scenario};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const REFERENCE: &str = include_str!("../../core/scenarios/reference.json");

/// Longest run the page will simulate, in ticks.
pub const MAX_TICKS: u64 = 20_000;

/// The bundled reference scenario.
pub fn reference() -> &'static str {
    REFERENCE
}

/// A random valid scenario as JSON. `kind` is `es`, `mc` or `mc_tight`.
pub fn random(seed: u64, kind: &str) -> Result<String, String> {
    let s = match kind {
        "es" => random_es_scenario(seed),
        "mc" => random_mc_scenario(seed, false),
        "mc_tight" => random_mc_scenario(seed, true),
        other => return Err(format!("unknown scenario kind `{other}`")),
    };
    Ok(s.to_json())
}

/// Validation issues of a scenario as a JSON array of
/// `{assumption, detail}`; empty when the scenario is valid.
pub fn check(text: &str) -> Result<String, String> {
    let s = Scenario::from_json(text, "input").map_err(|e| e.to_string())?;
    let issues: Vec<Value> = s
        .issues()
        .iter()
        .map(|i| json!({ "assumption": i.assumption, "detail": i.detail }))
        .collect();
    Ok(Value::Array(issues).to_string())
}

/// Runs a scenario and returns the geometry, the sampled path and the
/// non-phase events.
pub fn simulate(text: &str) -> Result<String, String> {
    let s = Scenario::from_json(text, "input")
        .and_then(Scenario::validate)
        .map_err(|e| e.to_string())?;
    let opts = RunOptions { max_ticks: Some(s.max_ticks.min(MAX_TICKS)), ..RunOptions::default() };
    let r = run_scenario(&s, &opts).map_err(|e| e.to_string())?;
    let path: Vec<Value> = r
        .records
        .iter()
        .map(|t| {
            let back = matches!(t.nav_phase, "turning" | "backtracking");
            json!([t.x, t.y, t.battery, back])
        })
        .collect();
    let events: Vec<&cbsa::harness::Event> = r.events.iter().filter(|e| e.kind != "phase").collect();
    let out = json!({
        "name": s.name,
        "obstacles": s.obstacles.iter().map(|o| &o.vertices).collect::<Vec<_>>(),
        "stations": s.stations,
        "targets": s.targets,
        "capacity": s.plant.battery_capacity,
        "path": path,
        "events": events,
        "stop": r.stop,
        "ticks": r.ticks,
        "violations": r.violation_counts,
        "visited": r.visits.len(),
        "targets_total": r.targets_total,
    });
    Ok(out.to_string())
}

#[wasm_bindgen(js_name = referenceScenario)]
pub fn reference_scenario() -> String {
    REFERENCE.to_string()
}

#[wasm_bindgen(js_name = randomScenario)]
pub fn random_scenario(seed: u32, kind: &str) -> Result<String, JsError> {
    random(seed as u64, kind).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = validateScenario)]
pub fn validate_scenario(text: &str) -> Result<String, JsError> {
    check(text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = runScenario)]
pub fn run_scenario_json(text: &str) -> Result<String, JsError> {
    simulate(text).map_err(|e| JsError::new(&e))
}
