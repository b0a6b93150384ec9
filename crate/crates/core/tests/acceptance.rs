//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::{PI, SQRT_2};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cbsa::completion::{astar_cells, Cell, GridMap};
use cbsa::geometry::dist;
use cbsa::harness::{
    assemble, assemble_with, load_scenario, random_es_scenario, random_mc_scenario, run_scenario, AssembleError,
    LegRecord, RunOptions, RunReport, Scenario, StopReason, TraceRecord,
};
use cbsa::navigation::{backtrack_step, reach_residual, solve_reach, Pose, Waypoint, WaypointLog};
use cbsa::plant::{integrate_pose, PlantParams, RoverState};
use cbsa::sync::{compose, compose_all, run, Component, RateEntry, Trace, Value, ValueStore};

const BE_REL_TOL: f64 = 1e-6;
const RETRACE_TOL: f64 = 1e-6;
const LSQ_TOL: f64 = 1e-9;
const KIN_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.json"))
}

// ---------------------------------------------------------------------------
// 1. reference scenario

fn criterion_reference() -> Outcome {
    let t0 = Instant::now();
    let s = match load_scenario(&scenario_path("reference")) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let r = run_scenario(&s, &RunOptions::default()).expect("reference scenario assembles");
    let elapsed = t0.elapsed().as_secs_f64();
    let kinds: Vec<&str> = r
        .events
        .iter()
        .filter(|e| match e.kind.as_str() {
            "switch" => e.detail["instance"] == "MP",
            k => matches!(k, "target_visited" | "recharge"),
        })
        .map(|e| e.kind.as_str())
        .collect();
    let recharge = r.events_of("recharge").next();
    let station = recharge.map(|e| e.detail["station"].as_i64().unwrap_or(-1));
    let before = recharge.and_then(|e| e.detail["battery_before"].as_f64()).unwrap_or(f64::NAN);
    let switch = r.events_of("switch").find(|e| e.detail["instance"] == "MP" && e.detail["to"] == "BC");
    let expected = ["target_visited", "switch", "recharge", "switch", "target_visited"];
    let pass = kinds == expected
        && station == Some(1)
        && before > 0.0
        && before <= 5.0
        && r.passed()
        && matches!(r.stop, StopReason::MissionComplete)
        && elapsed < 10.0;
    let at = switch.map_or(String::from("none"), |e| {
        format!("B = {:.2} at ({:.3}, {:.3})", num(&e.detail["battery"]), num(&e.detail["x"]), num(&e.detail["y"]))
    });
    outcome(
        pass,
        format!(
            "events {kinds:?}; switch {at}; arrival at PS{} with B = {before:.3}; {} violations; {elapsed:.2} s",
            station.map_or(0, |k| k + 1),
            r.violations.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2-4, 9. randomized energy-safety runs

/// Forward/backward comparison of one recharge episode.
struct Episode {
    fe_recorded: f64,
    fe_forward: f64,
    be_measured: f64,
    deviation: f64,
    anchored: bool,
}

/// Splits a trace into recharge episodes: the forward stretch that the
/// backtrack retraced, matched tick by tick against the backtrack.
fn episodes(records: &[TraceRecord]) -> (Vec<Episode>, usize) {
    let mut out = Vec::new();
    let mut stranded = 0;
    let phase = |i: usize| records[i].nav_phase;
    let mut i = 1;
    while i < records.len() {
        if phase(i) != "turning" || phase(i - 1) == "turning" {
            i += 1;
            continue;
        }
        let t_f = i - 1;
        let mut t_e = i;
        while t_e + 1 < records.len() && phase(t_e + 1) == "turning" {
            t_e += 1;
        }
        let mut t_d = t_e;
        while t_d + 1 < records.len() && phase(t_d + 1) == "backtracking" {
            t_d += 1;
        }
        i = t_d + 1;
        match records.get(t_d + 1).map(|r| r.nav_phase) {
            Some("docked") => {}
            Some("stranded") => {
                stranded += 1;
                continue;
            }
            _ => continue,
        }
        let n = t_d - t_e;
        if n > t_f {
            stranded += 1;
            continue;
        }
        let deviation = (0..=n)
            .map(|j| {
                let (b, f) = (&records[t_e + j], &records[t_f - j]);
                dist([b.x, b.y], [f.x, f.y])
            })
            .fold(0.0, f64::max);
        out.push(Episode {
            fe_recorded: records[t_f + 1].fe,
            fe_forward: records[t_f].e_used - records[t_f - n].e_used,
            be_measured: records[t_d].e_used - records[t_e].e_used,
            deviation,
            anchored: records[t_f - n].ps_visible >= 0,
        });
    }
    (out, stranded)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[derive(Default)]
struct EsSummary {
    runs: usize,
    ticks: u64,
    es_violations: usize,
    cf_violations: usize,
    nonpositive_battery: usize,
    nonpositive_distance: usize,
    step_errors: Vec<String>,
    recharges: usize,
    completed: usize,
    episodes: Vec<Episode>,
    stranded: usize,
    case_counts: BTreeMap<u8, usize>,
    case_failures: Vec<String>,
}

fn summarize(s: &Scenario, r: RunReport) -> EsSummary {
    let (episodes, stranded) = episodes(&r.records);
    EsSummary {
        runs: 1,
        ticks: r.ticks,
        es_violations: r.violation_counts.get("es").copied().unwrap_or(0),
        cf_violations: r.violation_counts.get("cf").copied().unwrap_or(0),
        nonpositive_battery: r.records.iter().filter(|x| !(x.battery > 0.0)).count(),
        nonpositive_distance: r.records.iter().filter(|x| !(x.d_o > 0.0)).count(),
        step_errors: match &r.stop {
            StopReason::StepError(e) => vec![format!("{}: {e}", s.name)],
            _ => Vec::new(),
        },
        recharges: r.events_of("recharge").count(),
        completed: usize::from(matches!(r.stop, StopReason::MissionComplete)),
        episodes,
        stranded,
        case_counts: r.case_counts.clone(),
        case_failures: r.case_failures.iter().map(|c| format!("{}: {:?}", s.name, c)).collect(),
    }
}

fn merge(mut a: EsSummary, b: EsSummary) -> EsSummary {
    a.runs += b.runs;
    a.ticks += b.ticks;
    a.es_violations += b.es_violations;
    a.cf_violations += b.cf_violations;
    a.nonpositive_battery += b.nonpositive_battery;
    a.nonpositive_distance += b.nonpositive_distance;
    a.step_errors.extend(b.step_errors);
    a.recharges += b.recharges;
    a.completed += b.completed;
    a.episodes.extend(b.episodes);
    a.stranded += b.stranded;
    for (k, v) in b.case_counts {
        *a.case_counts.entry(k).or_default() += v;
    }
    a.case_failures.extend(b.case_failures);
    a
}

fn es_runs() -> EsSummary {
    let reference = load_scenario(&scenario_path("reference")).expect("reference scenario loads");
    let mut scenarios = vec![reference];
    scenarios.extend((0..200).map(random_es_scenario));
    scenarios
        .par_iter()
        .map(|s| {
            let r = run_scenario(s, &RunOptions::default()).expect("random scenarios assemble");
            summarize(s, r)
        })
        .reduce(EsSummary::default, merge)
}

fn criterion_es(sum: &EsSummary) -> Outcome {
    let pass = sum.es_violations == 0 && sum.nonpositive_battery == 0 && sum.step_errors.is_empty() && sum.runs >= 201;
    outcome(
        pass,
        format!(
            "{} runs ({} ticks, {} recharges, {} completed): {} ES violations, {} ticks with B <= 0{}",
            sum.runs,
            sum.ticks,
            sum.recharges,
            sum.completed,
            sum.es_violations,
            sum.nonpositive_battery,
            sum.step_errors.first().map_or(String::new(), |e| format!("; step error {e}"))
        ),
    )
}

fn criterion_cf(sum: &EsSummary) -> Outcome {
    outcome(
        sum.cf_violations == 0 && sum.nonpositive_distance == 0,
        format!(
            "{} runs: {} CF violations, {} ticks with d_o <= 0",
            sum.runs, sum.cf_violations, sum.nonpositive_distance
        ),
    )
}

fn criterion_be_fe(sum: &EsSummary) -> Outcome {
    let eps = &sum.episodes;
    let be_err = eps.iter().map(|e| rel_err(e.be_measured, e.fe_forward)).fold(0.0, f64::max);
    let fe_err = eps.iter().map(|e| rel_err(e.fe_recorded, e.fe_forward)).fold(0.0, f64::max);
    let dev = eps.iter().map(|e| e.deviation).fold(0.0, f64::max);
    let unanchored = eps.iter().filter(|e| !e.anchored).count();
    let pass = !eps.is_empty()
        && be_err <= BE_REL_TOL
        && fe_err <= BE_REL_TOL
        && dev <= RETRACE_TOL
        && unanchored == 0
        && sum.stranded == 0;
    outcome(
        pass,
        format!(
            "{} episodes: max |BE - FE| rel {be_err:.1e}, recorded FE rel {fe_err:.1e}, max retrace deviation {dev:.1e} m, {} stranded, {unanchored} unanchored",
            eps.len(),
            sum.stranded
        ),
    )
}

fn criterion_cases(sum: &EsSummary) -> Outcome {
    let all_seen = (1..=4).all(|c| sum.case_counts.get(&c).copied().unwrap_or(0) > 0);
    outcome(
        sum.case_failures.is_empty() && all_seen,
        format!(
            "decision pairs per case {:?}; {} failures{}",
            sum.case_counts,
            sum.case_failures.len(),
            sum.case_failures.first().map_or(String::new(), |f| format!(", first: {f}"))
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. least-squares backtracker

fn criterion_least_squares() -> Outcome {
    let plant = PlantParams::default();
    let t = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let v = rng.random_range(0.0..=plant.v_max);
        let omega = rng.random_range(-plant.omega_max..=plant.omega_max);
        let a = RoverState::at([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], rng.random_range(-PI..PI), 1.0);
        let b = integrate_pose(&a, v, omega, t);
        let (pa, pb) = (Pose::new(a.p, a.theta), Pose::new(b.p, b.theta));
        let fwd = solve_reach(pa, pb, t);
        let log = WaypointLog::anchored(0, Waypoint { pose: pa, tick: 0, e_mark: 0.0, seg_energy: 0.0, be_cum: 0.0 });
        let (back, _) = backtrack_step(pb.reversed(), &log, &plant, t).expect("one waypoint");
        worst = worst
            .max((fwd.v - v).abs())
            .max((fwd.omega - omega).abs())
            .max((back.v - v).abs())
            .max((back.omega + omega).abs());
    }
    let mut beaten = 0;
    for _ in 0..1_000 {
        let v = rng.random_range(0.05..=plant.v_max);
        let omega = rng.random_range(-plant.omega_max..=plant.omega_max);
        let a = RoverState::at([0.0, 0.0], rng.random_range(-PI..PI), 1.0);
        let mut b = integrate_pose(&a, v, omega, t);
        b.p[0] += rng.random_range(-1e-3..1e-3);
        b.p[1] += rng.random_range(-1e-3..1e-3);
        let (pa, pb) = (Pose::new(a.p, a.theta), Pose::new(b.p, b.theta));
        let cmd = solve_reach(pa, pb, t);
        let best = reach_residual(pa, pb, cmd.v, cmd.omega, t);
        let (lo, hi) = (cmd.v - 0.05, cmd.v + 0.05);
        let grid_min = (0..10_000)
            .map(|k| reach_residual(pa, pb, lo + (hi - lo) * k as f64 / 9_999.0, cmd.omega, t))
            .fold(f64::INFINITY, f64::min);
        if best > grid_min * (1.0 + 1e-12) + 1e-18 {
            beaten += 1;
        }
    }
    outcome(
        worst <= LSQ_TOL && beaten == 0,
        format!("10^4 round trips: max error {worst:.1e}; 10^3 perturbed waypoints: {beaten} beaten by the 10^4-point grid"),
    )
}

// ---------------------------------------------------------------------------
// 6. kinematics

fn rk4(p: [f64; 3], v: f64, omega: f64, t: f64, h: f64) -> [f64; 3] {
    let f = |s: [f64; 3]| [v * s[2].cos(), v * s[2].sin(), omega];
    let n = (t / h).round() as usize;
    let h = t / n as f64;
    let mut s = p;
    for _ in 0..n {
        let k1 = f(s);
        let k2 = f([s[0] + h / 2.0 * k1[0], s[1] + h / 2.0 * k1[1], s[2] + h / 2.0 * k1[2]]);
        let k3 = f([s[0] + h / 2.0 * k2[0], s[1] + h / 2.0 * k2[1], s[2] + h / 2.0 * k2[2]]);
        let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1], s[2] + h * k3[2]]);
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

fn criterion_kinematics() -> Outcome {
    let plant = PlantParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let v = rng.random_range(0.0..=plant.v_max);
        let omega = rng.random_range(-plant.omega_max..=plant.omega_max);
        let t = rng.random_range(0.001..=0.2);
        let a = RoverState::at([rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], rng.random_range(-PI..PI), 1.0);
        let closed = integrate_pose(&a, v, omega, t);
        let num = rk4([a.p[0], a.p[1], a.theta], v, omega, t, 1e-4);
        worst = worst.max(dist(closed.p, [num[0], num[1]]));
    }
    outcome(worst <= KIN_TOL, format!("10^3 random arcs: max position error {worst:.1e} m"))
}

// ---------------------------------------------------------------------------
// 7. scheduler semantics

fn ints(trace: &Trace, var: &str) -> Vec<i64> {
    trace.column(var).iter().map(|v| v.and_then(Value::as_int).unwrap_or(i64::MIN)).collect()
}

fn counter(name: &str, var: &'static str, period: u64) -> Component {
    Component::builder(name)
        .state([var])
        .outputs([var])
        .rate(RateEntry::new(period, move |v| Ok(vec![(var.into(), Value::Int(v.int(var)? + 1))])))
        .build()
        .expect("counter builds")
}

fn echo_pair() -> Component {
    let m1 = Component::builder("M1")
        .state(["c", "seen"])
        .inputs(["b"])
        .outputs(["a"])
        .rate(
            RateEntry::new(1, |v| Ok(vec![("c".into(), Value::Int(v.int("c")? + 1)), ("seen".into(), Value::Int(v.int("b")?))]))
                .with_output(|v| Ok(vec![("a".into(), Value::Int(v.int("c")?))])),
        )
        .build()
        .expect("M1 builds");
    let m2 = Component::builder("M2")
        .inputs(["a"])
        .outputs(["b"])
        .rate(RateEntry::output_only(1, |v| Ok(vec![("b".into(), Value::Int(v.int("a")?))])))
        .build()
        .expect("M2 builds");
    compose(&m1, &m2).expect("echo pair composes")
}

/// A random acyclic-or-not graph of accumulators: component k owns `x_k`
/// and publishes `y_k`, and adds the outputs it reads to its state.
fn random_graph(rng: &mut ChaCha8Rng) -> (Component, ValueStore, Vec<u64>) {
    let n = rng.random_range(2..=5);
    let periods: Vec<u64> = (0..n).map(|_| rng.random_range(1..=4u64)).collect();
    let names: Vec<(&'static str, &'static str)> =
        [("x0", "y0"), ("x1", "y1"), ("x2", "y2"), ("x3", "y3"), ("x4", "y4")][..n].to_vec();
    let mut init = ValueStore::new();
    let parts: Vec<Component> = (0..n)
        .map(|k| {
            let (x, y) = names[k];
            let reads: Vec<&'static str> = (0..n).filter(|&j| j != k && rng.random_bool(0.5)).map(|j| names[j].1).collect();
            init = std::mem::take(&mut init).with(x, 0i64).with(y, 0i64);
            let reads_f = reads.clone();
            Component::builder(&format!("M{k}"))
                .state([x])
                .inputs(reads.clone())
                .outputs([y])
                .rate(
                    RateEntry::new(periods[k], move |v| {
                        let mut acc = v.int(x)? + 1;
                        for r in &reads_f {
                            acc += v.int(r)?.rem_euclid(7);
                        }
                        Ok(vec![(x.into(), Value::Int(acc))])
                    })
                    .with_output(move |v| Ok(vec![(y.into(), Value::Int(v.int(x)?))])),
                )
                .build()
                .expect("random part builds")
        })
        .collect();
    let refs: Vec<&Component> = parts.iter().collect();
    (compose_all(&refs).expect("random graph composes"), init, periods)
}

fn criterion_scheduler() -> Outcome {
    let counters = compose(&counter("fast", "f", 1), &counter("slow", "s", 2)).expect("counters compose");
    let init = ValueStore::new().with("f", 0i64).with("s", 0i64);
    let trace = run(&counters, &init, 0.05, 4, &mut []).expect("counters run");
    let counters_ok = ints(&trace, "f") == [1, 2, 3, 4] && ints(&trace, "s") == [0, 1, 1, 2];

    let echo = echo_pair();
    let init = ValueStore::new().with("c", 0i64).with("seen", 0i64).with("a", 0i64).with("b", 0i64);
    let trace = run(&echo, &init, 0.05, 4, &mut []).expect("echo runs");
    let echo_ok = ints(&trace, "a") == [1, 2, 3, 4] && ints(&trace, "b") == [1, 2, 3, 4] && ints(&trace, "seen") == [0, 1, 2, 3];

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = Vec::new();
    for g in 0..100 {
        let (comp, init, periods) = random_graph(&mut rng);
        let ticks = 24;
        let trace = run(&comp, &init, 0.05, ticks, &mut []).expect("random graph runs");
        for (k, period) in periods.iter().enumerate() {
            for var in [format!("x{k}"), format!("y{k}")] {
                let col = ints(&trace, &var);
                let mut prev = 0;
                for (i, &val) in col.iter().enumerate() {
                    let tick = i as u64 + 1;
                    let fires = tick.is_multiple_of(*period);
                    if fires != (val != prev) {
                        bad.push(format!("graph {g}: {var} at tick {tick} (period {period})"));
                    }
                    prev = val;
                }
            }
        }
    }
    outcome(
        counters_ok && echo_ok && bad.is_empty(),
        format!(
            "two counters {}, echo {}, 100 random graphs: {} containment/retention failures{}",
            if counters_ok { "match" } else { "DIFFER" },
            if echo_ok { "match" } else { "DIFFER" },
            bad.len(),
            bad.first().map_or(String::new(), |b| format!(", first {b}"))
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. contract discharge

fn criterion_discharge() -> Outcome {
    let es = load_scenario(&scenario_path("reference")).expect("reference scenario loads");
    let mc = load_scenario(&scenario_path("mc_feasible")).expect("mc scenario loads");
    let es_ok = assemble(&es).is_ok();
    let mc_ok = assemble(&mc).is_ok();
    let mutant = |component: &'static str, token: &'static str| {
        match assemble_with(&es, |cs| {
            for c in cs.iter_mut().filter(|c| c.contract.component == component) {
                c.contract = c.contract.clone().without_guarantee_token(token);
            }
        }) {
            Err(AssembleError::Discharge(r)) => r.uncovered.iter().any(|(_, t)| t == token),
            _ => false,
        }
    };
    let be_caught = mutant("Nav", "A_BE");
    let p_caught = mutant("Plant", "A_P");
    outcome(
        es_ok && mc_ok && be_caught && p_caught,
        format!(
            "ES/CF wiring {}, MC wiring {}, Nav without A_BE {}, Plant without A_P {}",
            if es_ok { "discharged" } else { "REJECTED" },
            if mc_ok { "discharged" } else { "REJECTED" },
            if be_caught { "rejected (A_BE uncovered)" } else { "NOT caught" },
            if p_caught { "rejected (A_P uncovered)" } else { "NOT caught" }
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. mission completion

/// Plain Dijkstra over the same move rules as the planner's grid search.
fn dijkstra(map: &GridMap, start: Cell, goal: Cell) -> Option<f64> {
    let idx = |c: Cell| c.1 * map.nx + c.0;
    let mut dist = vec![f64::INFINITY; map.nx * map.ny];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0.0;
    heap.push(Reverse((0u64, start)));
    let key = |d: f64| (d * 1e9).round() as u64;
    while let Some(Reverse((_, c))) = heap.pop() {
        if c == goal {
            return Some(dist[idx(c)]);
        }
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (x, y) = (c.0 as i64 + dx, c.1 as i64 + dy);
                if x < 0 || y < 0 || x >= map.nx as i64 || y >= map.ny as i64 {
                    continue;
                }
                let n = (x as usize, y as usize);
                if !(n == goal || map.is_free(n)) {
                    continue;
                }
                if dx != 0 && dy != 0 && !(map.is_free((n.0, c.1)) && map.is_free((c.0, n.1))) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { SQRT_2 } else { 1.0 };
                let d = dist[idx(c)] + step;
                if d < dist[idx(n)] - 1e-12 {
                    dist[idx(n)] = d;
                    heap.push(Reverse((key(d), n)));
                }
            }
        }
    }
    None
}

fn path_cost(path: &[Cell]) -> f64 {
    path.windows(2)
        .map(|w| if w[0].0 != w[1].0 && w[0].1 != w[1].1 { SQRT_2 } else { 1.0 })
        .sum()
}

fn astar_matches_dijkstra() -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = 0;
    let mut reachable = 0;
    for _ in 0..100 {
        let (nx, ny) = (rng.random_range(5..40), rng.random_range(5..40));
        let mut map = GridMap::empty([0.0, 0.0], nx, ny, 0.1);
        let density = rng.random_range(0.0..0.45);
        for x in 0..nx {
            for y in 0..ny {
                if rng.random_bool(density) {
                    map.set_occupied((x, y), true);
                }
            }
        }
        let start = (rng.random_range(0..nx), rng.random_range(0..ny));
        let goal = (rng.random_range(0..nx), rng.random_range(0..ny));
        map.set_occupied(start, false);
        let oracle = dijkstra(&map, start, goal);
        let found = astar_cells(&map, start, goal).map(|p| path_cost(&p));
        reachable += usize::from(oracle.is_some());
        let same = match (oracle, found) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9,
            (None, None) => true,
            _ => false,
        };
        mismatches += usize::from(!same);
    }
    (mismatches, reachable)
}

struct McOutcome {
    on_time: bool,
    switched: bool,
    legs: Vec<LegRecord>,
    name: String,
}

fn mc_run(s: &Scenario) -> McOutcome {
    let r = run_scenario(s, &RunOptions::default()).expect("mc scenarios assemble");
    let deadline = s.mc.as_ref().map_or(0.0, |m| m.deadline);
    let finish = r.visits.last().map(|v| v.1);
    let on_time = r.visits.len() == r.targets_total && finish.is_some_and(|t| t < deadline) && !r.violated("mc");
    let switched = r
        .events_of("switch")
        .any(|e| e.detail["instance"] == "MP" && e.detail["to"] == "BC" && e.detail.get("initial").is_none());
    McOutcome { on_time, switched, legs: r.legs, name: s.name.clone() }
}

fn criterion_mc() -> Outcome {
    let t0 = Instant::now();
    let (mismatches, reachable) = astar_matches_dijkstra();
    let feasible: Vec<McOutcome> = (0..50).into_par_iter().map(|k| mc_run(&random_mc_scenario(k, false))).collect();
    let tight: Vec<McOutcome> = (0..20).into_par_iter().map(|k| mc_run(&random_mc_scenario(1000 + k, true))).collect();
    let legs: Vec<&LegRecord> = feasible.iter().chain(&tight).flat_map(|o| &o.legs).collect();
    let over = legs.iter().filter(|l| !l.within_bound()).count();
    let feasible_ok = feasible.iter().filter(|o| o.on_time).count();
    let tight_switched = tight.iter().filter(|o| o.switched).count();
    let tight_ok = tight.iter().filter(|o| o.switched && o.on_time).count();
    let late: Vec<&str> = feasible.iter().chain(&tight).filter(|o| !o.on_time).map(|o| o.name.as_str()).collect();
    let elapsed = t0.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && over == 0 && !legs.is_empty() && feasible_ok == 50 && tight_ok == 20 && elapsed < 300.0,
        format!(
            "A* vs Dijkstra: {mismatches}/100 mismatches ({reachable} reachable); {} BC legs, {over} over bound; feasible {feasible_ok}/50 on time; tight {tight_ok}/20 on time ({tight_switched} switched){}; {elapsed:.1} s",
            legs.len(),
            late.first().map_or(String::new(), |n| format!("; late: {n}"))
        ),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let t0 = Instant::now();
    let es = es_runs();
    let results: Vec<(u8, &str, Outcome)> = vec![
        (1, "reference scenario reproduction", criterion_reference()),
        (2, "energy safety on random scenarios", criterion_es(&es)),
        (3, "collision freedom on random scenarios", criterion_cf(&es)),
        (4, "backtrack energy equals forward energy", criterion_be_fe(&es)),
        (5, "least-squares backtracker", criterion_least_squares()),
        (6, "kinematics oracle", criterion_kinematics()),
        (7, "scheduler semantics", criterion_scheduler()),
        (8, "contract discharge", criterion_discharge()),
        (9, "per-case decision chains", criterion_cases(&es)),
        (10, "mission completion suite", criterion_mc()),
    ];
    let mut failed = 0;
    for (id, name, o) in &results {
        failed += usize::from(!o.pass);
        println!("[{}] {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} passed in {:.1} s", results.len() - failed, results.len(), t0.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn num(v: &serde_json::Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}
