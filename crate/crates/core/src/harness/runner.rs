use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;

use super::properties::{
    case_check, cf_holds, energy_view, es_holds, CaseCheck, DecisionSample, EnergyView, LegRecord, PropertySet,
    PropertyViolation, VisitTracker,
};
use super::scenario::{Scenario, ScenarioMode};
use super::system::{assemble, mode_of, real_or_nan, value_int, AssembleError, System};
use crate::assurance::{ContractMonitor, Mode};
use crate::completion::{mission_time_bound, McNavState};
use crate::geometry::Point;
use crate::navigation::NavDecision;
use crate::sync::{step_in_place, Codec, SimClock, ValueStore};
use crate::vars;

/// Column order of the per-tick CSV.
pub const CSV_COLUMNS: [&str; 26] = [
    "tick",
    "time",
    "x",
    "y",
    "theta",
    "v",
    "omega",
    "battery",
    "e_used",
    "ir_min",
    "d_o",
    "ps_visible",
    "ctlr",
    "nav_mode",
    "cf_mode",
    "nav_phase",
    "target_x",
    "target_y",
    "fe",
    "be",
    "e_req",
    "visited",
    "mc_bound",
    "es_ok",
    "cf_ok",
    "dock",
];

/// One row of the trace: the state at the end of a tick.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub time: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub battery: f64,
    pub e_used: f64,
    pub ir_min: f64,
    pub d_o: f64,
    pub ps_visible: i64,
    pub ctlr: Mode,
    pub nav_mode: Mode,
    pub cf_mode: Mode,
    pub nav_phase: &'static str,
    pub target_x: f64,
    pub target_y: f64,
    pub fe: f64,
    pub be: f64,
    /// `E(p, PS)`; NaN outside energy-safety runs.
    pub e_req: f64,
    pub visited: i64,
    pub mc_bound: f64,
    pub es_ok: Option<bool>,
    pub cf_ok: Option<bool>,
    pub dock: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Event {
    pub tick: u64,
    pub time: f64,
    pub kind: String,
    pub detail: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    MissionComplete,
    MaxTicks,
    Violation,
    StepError(String),
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Overrides the scenario's `max_ticks`.
    pub max_ticks: Option<u64>,
    pub checks: PropertySet,
    /// Stop at the first violation instead of recording and continuing.
    pub fail_fast: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_ticks: None, checks: PropertySet::ALL, fail_fast: false }
    }
}

/// Everything a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub name: String,
    pub mode: ScenarioMode,
    pub ticks: u64,
    pub stop: StopReason,
    #[serde(skip)]
    pub records: Vec<TraceRecord>,
    #[serde(skip)]
    pub events: Vec<Event>,
    /// First violation of each property.
    pub violations: Vec<PropertyViolation>,
    pub violation_counts: BTreeMap<String, usize>,
    /// Number of checked decision pairs per case.
    pub case_counts: BTreeMap<u8, usize>,
    pub case_failures: Vec<CaseCheck>,
    pub legs: Vec<LegRecord>,
    pub visits: Vec<(usize, f64)>,
    pub targets_total: usize,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violated(&self, property: &str) -> bool {
        self.violation_counts.contains_key(property)
    }

    pub fn events_of<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a Event> + 'a {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

fn record_of(store: &ValueStore, clock: &SimClock, mode: ScenarioMode, energy: &EnergyView) -> TraceRecord {
    let p = store.vec2(vars::P).unwrap_or([f64::NAN; 2]);
    let t = store.vec2(vars::T).unwrap_or([f64::NAN; 2]);
    let ir_min = store
        .get(vars::IR)
        .and_then(|v| v.as_seq())
        .map(|s| s.iter().filter_map(|x| x.as_real()).fold(f64::INFINITY, f64::min))
        .unwrap_or(f64::NAN);
    let nav_mode = mode_of(store, vars::NAV_MODE).unwrap_or(Mode::Ac);
    let phase = match mode {
        ScenarioMode::EsCf => store
            .get(vars::NAV_STATE)
            .and_then(|v| NavDecision::decode(v).ok())
            .map_or("unknown", |d| d.phase.name()),
        ScenarioMode::Mc => match store.get(vars::NAV_STATE).and_then(|v| McNavState::decode(v).ok()) {
            Some(d) if d.nav_mode == Mode::Ac => "forward",
            Some(McNavState { leg: Some(l), .. }) if l.done_tick < 0 => "primitive",
            Some(_) => "holding",
            None => "unknown",
        },
    };
    let es = mode == ScenarioMode::EsCf;
    TraceRecord {
        tick: clock.tick(),
        time: clock.time(),
        x: p[0],
        y: p[1],
        theta: real_or_nan(store, vars::THETA),
        v: real_or_nan(store, vars::V),
        omega: real_or_nan(store, vars::OMEGA),
        battery: real_or_nan(store, vars::B),
        e_used: real_or_nan(store, vars::E_USED),
        ir_min,
        d_o: real_or_nan(store, vars::D_O),
        ps_visible: value_int(store, vars::PS_VISIBLE),
        ctlr: mode_of(store, vars::CTLR).unwrap_or(Mode::Ac),
        nav_mode,
        cf_mode: mode_of(store, vars::CF_MODE).unwrap_or(Mode::Ac),
        nav_phase: phase,
        target_x: t[0],
        target_y: t[1],
        fe: if es { real_or_nan(store, vars::FE) } else { f64::NAN },
        be: if es { energy.be } else { f64::NAN },
        e_req: if es { energy.requirement } else { f64::NAN },
        visited: value_int(store, vars::VISITED),
        mc_bound: if es { f64::NAN } else { real_or_nan(store, vars::MC_BOUND) },
        es_ok: None,
        cf_ok: None,
        dock: store.bool(vars::DOCK).unwrap_or(false),
    }
}

struct Recorder {
    fail_fast: bool,
    events: Vec<Event>,
    violations: Vec<PropertyViolation>,
    counts: BTreeMap<String, usize>,
    tripped: bool,
}

impl Recorder {
    fn event(&mut self, clock: &SimClock, kind: &str, detail: serde_json::Value) {
        self.events.push(Event { tick: clock.tick(), time: clock.time(), kind: kind.into(), detail });
    }

    fn violation(&mut self, clock: &SimClock, property: &str, detail: String) {
        let n = self.counts.entry(property.to_string()).or_insert(0);
        *n += 1;
        if *n == 1 {
            self.event(clock, "violation", json!({ "property": property, "detail": detail }));
            self.violations.push(PropertyViolation { property: property.into(), tick: clock.tick(), detail });
        }
        self.tripped = self.fail_fast;
    }
}

fn diff_events(rec: &mut Recorder, clock: &SimClock, a: &TraceRecord, b: &TraceRecord) {
    for (instance, from, to) in [("MP", a.ctlr, b.ctlr), ("Nav", a.nav_mode, b.nav_mode), ("CF", a.cf_mode, b.cf_mode)] {
        if from != to {
            let detail = json!({
                "instance": instance, "from": from, "to": to,
                "battery": b.battery, "fe": b.fe, "x": b.x, "y": b.y,
            });
            rec.event(clock, "switch", detail);
        }
    }
    if a.nav_phase != b.nav_phase {
        rec.event(clock, "phase", json!({ "from": a.nav_phase, "to": b.nav_phase, "battery": b.battery }));
    }
    if b.visited > a.visited {
        rec.event(clock, "target_visited", json!({ "index": b.visited - 1, "battery": b.battery, "x": b.x, "y": b.y }));
    }
    if b.battery > a.battery {
        rec.event(
            clock,
            "recharge",
            json!({ "station": b.ps_visible, "battery_before": a.battery, "battery_after": b.battery }),
        );
    }
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<RunReport, AssembleError> {
    let sys = assemble(s)?;
    Ok(run_system(s, &sys, opts))
}

/// Runs an assembled system until the mission completes, a step fails,
/// `max_ticks` elapse, or (with `fail_fast`) a property is violated.
pub fn run_system(s: &Scenario, sys: &System, opts: &RunOptions) -> RunReport {
    let p = &s.periods;
    let es_on = opts.checks.es && s.mode == ScenarioMode::EsCf;
    let cf_on = opts.checks.cf;
    let mc_on = opts.checks.mc && s.mode == ScenarioMode::Mc;
    let deadline = s.mc.as_ref().map_or(f64::INFINITY, |m| m.deadline);
    let max_ticks = opts.max_ticks.unwrap_or(s.max_ticks);

    let mut store = sys.initial.clone();
    let mut clock = SimClock::new(s.dt);
    let mut rec = Recorder {
        fail_fast: opts.fail_fast,
        events: Vec::new(),
        violations: Vec::new(),
        counts: BTreeMap::new(),
        tripped: false,
    };
    let mut monitors: Vec<ContractMonitor> = sys
        .contracts
        .iter()
        .filter(|c| s.mode == ScenarioMode::Mc || es_on || c.contract.component != "MP")
        .map(|c| ContractMonitor::new(c.contract.clone(), c.period))
        .collect();
    for m in &mut monitors {
        if let Err(e) = m.start(&store, &clock) {
            rec.violation(&clock, &format!("contract:{}", m.contract.component), e.to_string());
        }
    }
    if let (ScenarioMode::Mc, Some(planner)) = (s.mode, &sys.planner) {
        let bound = mission_time_bound(
            &planner.map,
            s.start_point(),
            Some(s.start[2]),
            &s.targets,
            &planner.speeds,
            planner.latency,
        );
        let feasible = bound.as_ref().is_ok_and(|b| *b < deadline);
        let detail = match &bound {
            Ok(b) => json!({ "bound": b, "deadline": deadline, "feasible": feasible }),
            Err(e) => json!({ "error": e.to_string(), "deadline": deadline, "feasible": false }),
        };
        rec.event(&clock, "mission_bound", detail);
        if mode_of(&store, vars::CTLR) == Some(Mode::Bc) {
            rec.event(&clock, "switch", json!({ "instance": "MP", "from": "AC", "to": "BC", "initial": true }));
        }
    }

    let mut energy = energy_view(&store, 0, p.nav, s.dt, s.energy.e_180);
    let mut records = vec![record_of(&store, &clock, s.mode, &energy)];
    let mut visits = VisitTracker::new(s.targets.clone(), s.nav.arrival_radius + 1e-9);
    let mut samples: Vec<DecisionSample> = Vec::new();
    let mut case_counts = BTreeMap::new();
    let mut case_failures = Vec::new();
    let mut legs = Vec::new();
    let mut last_leg: Option<(i64, Point)> = None;
    let mut stop = StopReason::MaxTicks;
    let mut mc_failed = false;

    for _ in 0..max_ticks {
        clock.advance();
        let tick = clock.tick();
        let before = energy;
        if let Err(e) = step_in_place(&sys.composition, &mut store, &clock) {
            let msg = e.to_string();
            let property = if msg.contains("battery depleted") && es_on { "es" } else { "step" };
            rec.violation(&clock, property, msg.clone());
            stop = StopReason::StepError(msg);
            break;
        }
        energy = energy_view(&store, tick, p.nav, s.dt, s.energy.e_180);
        let mut row = record_of(&store, &clock, s.mode, &energy);

        if es_on {
            let ok = es_holds(&energy);
            row.es_ok = Some(ok);
            if !ok {
                rec.violation(
                    &clock,
                    "es",
                    format!("B = {} <= E(p, PS) = {} ({})", energy.battery, energy.requirement, energy.ctlr),
                );
            }
            if tick.is_multiple_of(p.mp) {
                let sample = DecisionSample {
                    tick,
                    battery: before.battery,
                    be: before.be,
                    fe: real_or_nan(&store, vars::FE),
                    ctlr: energy.ctlr,
                };
                if let Some(prev) = samples.last() {
                    let c = case_check(prev, &sample, &s.energy);
                    *case_counts.entry(c.case).or_insert(0) += 1;
                    if !c.holds {
                        rec.violation(&clock, "cases", format!("case {}: {}", c.case, c.detail));
                        case_failures.push(c);
                    }
                }
                samples.push(sample);
            }
        }
        if cf_on {
            let ok = cf_holds(&store);
            row.cf_ok = Some(ok);
            if !ok {
                rec.violation(&clock, "cf", format!("d_o = {} at ({:.4}, {:.4})", row.d_o, row.x, row.y));
            }
        }
        for m in &mut monitors {
            match m.check(&store, &clock) {
                Ok(Some(v)) => rec.violation(&clock, &format!("contract:{}", v.contract), v.detail),
                Ok(None) => {}
                Err(e) => rec.violation(&clock, &format!("contract:{}", m.contract.component), e.to_string()),
            }
        }
        if let Some(k) = visits.observe([row.x, row.y], clock.time()) {
            if s.mode == ScenarioMode::Mc {
                rec.event(&clock, "target_reached", json!({ "index": k, "time": clock.time() }));
            }
        }
        if s.mode == ScenarioMode::Mc {
            if let Some(leg) = store
                .get(vars::NAV_STATE)
                .and_then(|v| McNavState::decode(v).ok())
                .and_then(|d| d.leg)
                .filter(|l| l.done_tick >= 0 && last_leg != Some((l.start_tick, l.target)))
            {
                last_leg = Some((leg.start_tick, leg.target));
                let r = LegRecord {
                    target: leg.target,
                    start_tick: leg.start_tick,
                    done_tick: leg.done_tick,
                    measured: (leg.done_tick - leg.start_tick) as f64 * s.dt,
                    bound: leg.bound,
                };
                rec.event(&clock, "leg_complete", json!(r));
                if mc_on && !r.within_bound() {
                    rec.violation(&clock, "tu", format!("leg took {} s > bound {} s", r.measured, r.bound));
                }
                legs.push(r);
            }
            if mc_on && !mc_failed && !visits.all_visited() && clock.time() >= deadline {
                mc_failed = true;
                rec.violation(
                    &clock,
                    "mc",
                    format!("deadline {deadline} s passed with {}/{} targets visited", visits.visits.len(), s.targets.len()),
                );
            }
        }

        let last = records.last().expect("tick 0 recorded");
        diff_events(&mut rec, &clock, last, &row);
        records.push(row);
        if store.bool(vars::DONE).unwrap_or(false) {
            rec.event(&clock, "mission_complete", json!({ "visited": s.targets.len() }));
            stop = StopReason::MissionComplete;
            break;
        }
        if rec.tripped {
            stop = StopReason::Violation;
            break;
        }
    }

    if mc_on && !mc_failed && !visits.all_visited() && !rec.tripped {
        rec.violation(
            &clock,
            "mc",
            format!("run ended with {}/{} targets visited", visits.visits.len(), s.targets.len()),
        );
    }
    rec.event(&clock, "stop", json!(stop));

    RunReport {
        name: s.name.clone(),
        mode: s.mode,
        ticks: clock.tick(),
        stop,
        records,
        events: rec.events,
        violations: rec.violations,
        violation_counts: rec.counts,
        case_counts,
        case_failures,
        legs,
        visits: visits.visits,
        targets_total: s.targets.len(),
    }
}
