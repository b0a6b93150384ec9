use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{Scenario, ScenarioMode};
use crate::completion::{detour_point, mission_time_bound, McAc, McParams, McPlanner};
use crate::geometry::{dist, Point, Polygon};

/// Half-width of the square arena random scenarios live in.
const ARENA: f64 = 1.4;

/// A random convex obstacle: a rotated rectangle or a jittered regular
/// polygon with five to seven sides. Not guaranteed to pass validation.
pub fn random_polygon(rng: &mut impl Rng, center: Point) -> Polygon {
    let rot = rng.random_range(0.0..TAU);
    let local: Vec<Point> = if rng.random_bool(0.5) {
        let (w, h) = (rng.random_range(0.12..0.5), rng.random_range(0.12..0.5));
        vec![[-w / 2.0, -h / 2.0], [w / 2.0, -h / 2.0], [w / 2.0, h / 2.0], [-w / 2.0, h / 2.0]]
    } else {
        let n = rng.random_range(5..=7);
        let r = rng.random_range(0.1..0.25);
        (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64 + rng.random_range(-0.15..0.15);
                let rr = r * rng.random_range(0.9..1.1);
                [rr * a.cos(), rr * a.sin()]
            })
            .collect()
    };
    let (c, s) = (rot.cos(), rot.sin());
    Polygon::new(
        local
            .into_iter()
            .map(|[x, y]| [center[0] + c * x - s * y, center[1] + s * x + c * y])
            .collect(),
    )
}

fn point(rng: &mut impl Rng) -> Point {
    [rng.random_range(-ARENA..ARENA), rng.random_range(-ARENA..ARENA)]
}

fn base(name: String, mode: ScenarioMode, seed: u64) -> Scenario {
    Scenario {
        name,
        mode,
        dt: 0.05,
        periods: Default::default(),
        plant: Default::default(),
        energy: Default::default(),
        nav: Default::default(),
        validation: Default::default(),
        obstacles: Vec::new(),
        stations: Vec::new(),
        targets: Vec::new(),
        start: [0.0; 3],
        initial_battery: None,
        mc: None,
        seed,
        max_ticks: 20_000,
    }
}

/// Fills `s` with a random field until the validator accepts it.
fn populate(
    rng: &mut ChaCha8Rng,
    s: &mut Scenario,
    stations: usize,
    targets: usize,
    mut accept: impl FnMut(&mut Scenario) -> bool,
) {
    loop {
        let n = rng.random_range(1..=5);
        s.obstacles = (0..n)
            .map(|_| {
                let c = point(rng);
                random_polygon(rng, c)
            })
            .collect();
        s.stations = (0..stations).map(|_| point(rng)).collect();
        s.targets = (0..targets).map(|_| point(rng)).collect();
        let start = s.stations.first().copied().unwrap_or_else(|| point(rng));
        s.start = [start[0], start[1], rng.random_range(-PI..PI)];
        if s.issues().is_empty() && accept(s) {
            return;
        }
    }
}

/// A random valid energy-safety scenario. Batteries are kept low enough that
/// most runs have to recharge.
pub fn random_es_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = base(format!("random_es_{seed}"), ScenarioMode::EsCf, seed);
    s.max_ticks = 4_000;
    s.initial_battery = Some(rng.random_range(8.0..40.0));
    let stations = rng.random_range(1..=3);
    let targets = rng.random_range(1..=3);
    populate(&mut rng, &mut s, stations, targets, |_| true);
    s
}

/// A random mission-completion scenario. Feasible ones get a deadline well
/// above the initial bound. Tight ones get a deadline just above the
/// decision module's first worst-case bound, so the detour AC soon forces a
/// switch.
pub fn random_mc_scenario(seed: u64, tight: bool) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4d43);
    let kind = if tight { "tight" } else { "feasible" };
    let mut s = base(format!("random_mc_{kind}_{seed}"), ScenarioMode::Mc, seed);
    let mut mc = McParams {
        ac: if tight || rng.random_bool(0.5) { McAc::Detour } else { McAc::Straight },
        detour_radius: if tight { 0.8 } else { 0.4 },
        ..McParams::default()
    };
    s.mc = Some(mc.clone());
    let targets = rng.random_range(2..=3);
    let horizon = |s: &Scenario| s.periods.mp as f64 * s.dt;
    let bound = |s: &Scenario| {
        let mc = s.mc.as_ref().expect("mc section");
        mission_time_bound(
            &mc.grid(&s.obstacles),
            s.start_point(),
            Some(s.start[2]),
            &s.targets,
            &mc.speeds(s.t_nav()),
            horizon(s),
        )
    };
    let first_worst = |s: &Scenario| {
        let mc = s.mc.as_ref().expect("mc section");
        let h = horizon(s);
        let planner = McPlanner::new(mc.grid(&s.obstacles), mc.speeds(s.t_nav()), s.targets.clone(), h);
        planner.worst_bound(s.start_point(), 0, s.plant.v_max * h, s.nav.arrival_radius + 1e-9)
    };
    let long_detour = |s: &Scenario| {
        let mc = s.mc.as_ref().expect("mc section");
        let (p, t) = (s.start_point(), s.targets[0]);
        let w = detour_point(s.seed, 0, p, t, mc.detour_radius, (mc.bounds_min, mc.bounds_max));
        dist(p, w) + dist(w, t) - dist(p, t) > 0.8
    };
    let mut attempt = 0u64;
    populate(&mut rng, &mut s, 0, targets, |s| {
        if tight {
            s.seed = seed.wrapping_add(attempt << 32);
            attempt += 1;
        }
        bound(s).is_ok() && (!tight || (long_detour(s) && first_worst(s).is_ok()))
    });
    mc.deadline = if tight {
        first_worst(&s).expect("accepted") + horizon(&s) + rng.random_range(0.2..0.5)
    } else {
        bound(&s).expect("accepted scenarios are bounded") * rng.random_range(1.6..2.5) + 2.0
    };
    s.max_ticks = (mc.deadline / s.dt).ceil() as u64 + 200;
    s.mc = Some(mc);
    s
}
