use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::plan::{mc_dm_switch, plan_leg, McPlanner};
use super::McAc;
use crate::assurance::{Mode, Predicate, SimplexInstance};
use crate::geometry::{dist, Point};
use crate::navigation::{blended_go_to_target, cf_instance, read_ir, NavCommand, NavParams, Pose};
use crate::plant::PlantParams;
use crate::sync::{Codec, Component, RateEntry, SeqReader, StepError, Value, VarId};
use crate::vars;

/// Planner memory of the mission-completion MP.
#[derive(Clone, Debug, PartialEq)]
pub struct McState {
    pub targets: Vec<Point>,
    pub next_index: usize,
    /// Point handed to Nav: a detour point or the next target.
    pub target: Point,
    /// Pending AC detour point before the next target.
    pub waypoint: Option<Point>,
    pub ctlr: Mode,
    pub deadline: f64,
    pub remaining_time: f64,
    /// Worst completion bound seen at the last decision.
    pub worst: f64,
    /// Set when the planner could not bound the rest of the mission.
    pub unreachable: bool,
    pub complete: bool,
}

impl McState {
    pub fn visited(&self) -> usize {
        self.next_index
    }
}

fn opt_point(v: Option<Point>) -> Value {
    match v {
        Some(p) => Value::seq(vec![Value::Vec2(p)]),
        None => Value::seq(Vec::new()),
    }
}

fn read_opt_point(v: &Value) -> Result<Option<Point>, StepError> {
    let mut r = SeqReader::new("optional point", v)?;
    if r.is_empty() {
        Ok(None)
    } else {
        Ok(Some(r.vec2()?))
    }
}

impl Codec for McState {
    fn encode(&self) -> Value {
        Value::seq(vec![
            Value::seq(self.targets.iter().map(|t| Value::Vec2(*t)).collect()),
            Value::Int(self.next_index as i64),
            Value::Vec2(self.target),
            opt_point(self.waypoint),
            self.ctlr.encode(),
            Value::Real(self.deadline),
            Value::Real(self.remaining_time),
            Value::Real(self.worst),
            Value::Bool(self.unreachable),
            Value::Bool(self.complete),
        ])
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        let mut r = SeqReader::new("mc state", value)?;
        let mut tr = SeqReader::new("targets", r.next()?)?;
        let targets = (0..tr.len()).map(|_| tr.vec2()).collect::<Result<_, _>>()?;
        Ok(McState {
            targets,
            next_index: r.int()? as usize,
            target: r.vec2()?,
            waypoint: read_opt_point(r.next()?)?,
            ctlr: r.decode()?,
            deadline: r.real()?,
            remaining_time: r.real()?,
            worst: r.real()?,
            unreachable: r.bool()?,
            complete: r.bool()?,
        })
    }
}

/// Static configuration of the mission-completion MP.
#[derive(Debug)]
pub struct McConfig {
    pub planner: Arc<McPlanner>,
    pub ac: McAc,
    pub detour_radius: f64,
    pub seed: u64,
    pub arrival_radius: f64,
    pub v_max: f64,
    pub s_mp: u64,
    pub dt: f64,
    pub start: Point,
    pub bounds: (Point, Point),
}

/// Detour point for leg `leg`: a seeded random offset from the midpoint of
/// `from → to`, kept inside the map.
pub fn detour_point(seed: u64, leg: usize, from: Point, to: Point, radius: f64, bounds: (Point, Point)) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (leg as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    let mid = [(from[0] + to[0]) / 2.0, (from[1] + to[1]) / 2.0];
    let margin = 0.05;
    [
        (mid[0] + r * a.cos()).clamp(bounds.0[0] + margin, bounds.1[0] - margin),
        (mid[1] + r * a.sin()).clamp(bounds.0[1] + margin, bounds.1[1] - margin),
    ]
}

impl McState {
    /// Planner state before the first decision; the DM runs on the start.
    pub fn initial(cfg: &McConfig, deadline: f64) -> McState {
        let targets = cfg.planner.targets.clone();
        let ms = McState {
            target: targets.first().copied().unwrap_or(cfg.start),
            complete: targets.is_empty(),
            targets,
            next_index: 0,
            waypoint: None,
            ctlr: Mode::Ac,
            deadline,
            remaining_time: deadline,
            worst: 0.0,
            unreachable: false,
        };
        let mut ms = with_detour(ms, cfg, cfg.start);
        decide_mode(&mut ms, cfg.start, cfg);
        publish_target(ms)
    }
}

fn with_detour(mut ms: McState, cfg: &McConfig, from: Point) -> McState {
    ms.waypoint = match (cfg.ac, ms.targets.get(ms.next_index)) {
        (McAc::Detour, Some(to)) => Some(detour_point(cfg.seed, ms.next_index, from, *to, cfg.detour_radius, cfg.bounds)),
        _ => None,
    };
    ms
}

fn decide_mode(ms: &mut McState, p: Point, cfg: &McConfig) {
    if ms.complete || ms.ctlr == Mode::Bc {
        return;
    }
    let d = mc_dm_switch(
        &cfg.planner,
        p,
        ms.next_index,
        ms.remaining_time,
        cfg.s_mp,
        cfg.dt,
        cfg.v_max,
        cfg.arrival_radius,
    );
    ms.worst = d.worst;
    ms.unreachable = d.error.is_some();
    if d.switch {
        ms.ctlr = Mode::Bc;
        ms.waypoint = None;
    }
}

fn publish_target(mut ms: McState) -> McState {
    if let Some(t) = ms.targets.get(ms.next_index) {
        ms.target = match ms.ctlr {
            Mode::Ac => ms.waypoint.unwrap_or(*t),
            Mode::Bc => *t,
        };
    }
    ms
}

/// One decision of the mission-completion MP at tick `tick`.
pub fn mp_mc_decide(ms: &McState, p: Point, tick: u64, cfg: &McConfig) -> McState {
    if ms.complete {
        return ms.clone();
    }
    let mut next = ms.clone();
    next.remaining_time = ms.deadline - tick as f64 * cfg.dt;
    if next.waypoint.is_some_and(|w| dist(p, w) <= cfg.arrival_radius) {
        next.waypoint = None;
    }
    if dist(p, next.targets[next.next_index]) <= cfg.arrival_radius {
        let reached = next.targets[next.next_index];
        next.next_index += 1;
        next.complete = next.next_index >= next.targets.len();
        next = if next.ctlr == Mode::Ac { with_detour(next, cfg, reached) } else { next };
    }
    decide_mode(&mut next, p, cfg);
    publish_target(next)
}

pub fn mc_mp_outputs(ms: &McState) -> Vec<(VarId, Value)> {
    vec![
        (vars::T.into(), Value::Vec2(ms.target)),
        (vars::CTLR.into(), ms.ctlr.encode()),
        (vars::VISITED.into(), Value::Int(ms.visited() as i64)),
        (vars::DONE.into(), Value::Bool(ms.complete)),
        (vars::MC_BOUND.into(), Value::Real(ms.worst)),
    ]
}

/// The mission-completion MP. Reads only the position.
pub fn mc_mp_component(cfg: Arc<McConfig>, period: u64) -> Component {
    Component::builder("MP")
        .state([vars::MISSION])
        .inputs([vars::P])
        .outputs([vars::T, vars::CTLR, vars::VISITED, vars::DONE, vars::MC_BOUND])
        .rate(
            RateEntry::new(period, move |view| {
                let ms: McState = view.decode(vars::MISSION)?;
                let next = mp_mc_decide(&ms, view.vec2(vars::P)?, view.tick(), &cfg);
                Ok(vec![(vars::MISSION.into(), next.encode())])
            })
            .with_output(|view| Ok(mc_mp_outputs(&view.decode(vars::MISSION)?))),
        )
        .build()
        .expect("mc mp variable sets are disjoint")
}

/// A BC leg being executed: remaining `(command, periods)` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct LegPlan {
    pub target: Point,
    pub start_tick: i64,
    /// `tu` of the leg as planned.
    pub bound: f64,
    pub steps: Vec<(NavCommand, u64)>,
    /// Tick at which the last step finishes, or -1 while steps remain.
    pub done_tick: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McNavState {
    pub nav_mode: Mode,
    pub cf_mode: Mode,
    pub cmd: NavCommand,
    pub leg: Option<LegPlan>,
    /// Set when a BC leg could not be planned.
    pub plan_failed: bool,
}

impl McNavState {
    pub fn initial() -> Self {
        McNavState {
            nav_mode: Mode::Ac,
            cf_mode: Mode::Ac,
            cmd: NavCommand::STOP,
            leg: None,
            plan_failed: false,
        }
    }
}

impl Codec for McNavState {
    fn encode(&self) -> Value {
        let leg = match &self.leg {
            None => Value::seq(Vec::new()),
            Some(l) => Value::seq(vec![
                Value::Vec2(l.target),
                Value::Int(l.start_tick),
                Value::Real(l.bound),
                Value::seq(
                    l.steps
                        .iter()
                        .map(|(c, n)| Value::seq(vec![Value::Real(c.v), Value::Real(c.omega), Value::Int(*n as i64)]))
                        .collect(),
                ),
                Value::Int(l.done_tick),
            ]),
        };
        Value::seq(vec![
            self.nav_mode.encode(),
            self.cf_mode.encode(),
            Value::Real(self.cmd.v),
            Value::Real(self.cmd.omega),
            leg,
            Value::Bool(self.plan_failed),
        ])
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        let mut r = SeqReader::new("mc nav state", value)?;
        let nav_mode = r.decode()?;
        let cf_mode = r.decode()?;
        let cmd = NavCommand { v: r.real()?, omega: r.real()? };
        let mut lr = SeqReader::new("leg", r.next()?)?;
        let leg = if lr.is_empty() {
            None
        } else {
            let target = lr.vec2()?;
            let start_tick = lr.int()?;
            let bound = lr.real()?;
            let mut sr = SeqReader::new("steps", lr.next()?)?;
            let mut steps = Vec::with_capacity(sr.len());
            for _ in 0..sr.len() {
                let mut s = SeqReader::new("step", sr.next()?)?;
                steps.push((NavCommand { v: s.real()?, omega: s.real()? }, s.int()? as u64));
            }
            Some(LegPlan { target, start_tick, bound, steps, done_tick: lr.int()? })
        };
        Ok(McNavState { nav_mode, cf_mode, cmd, leg, plan_failed: r.bool()? })
    }
}

/// Inputs of one mission-completion Nav decision.
#[derive(Clone, Debug)]
pub struct McNavInputs<'a> {
    pub tick: i64,
    /// Nav period in ticks.
    pub period: i64,
    pub pose: Pose,
    pub target: Point,
    pub ir: &'a [f64],
    pub nav_mode: Mode,
    pub cf_mode: Mode,
}

/// One Nav decision: the AC as in the energy-safety system, the BC running
/// the primitive plan for the current target.
pub fn mc_nav_step(
    prev: &McNavState,
    inp: &McNavInputs<'_>,
    planner: &McPlanner,
    plant: &PlantParams,
    nav: &NavParams,
) -> McNavState {
    let t_nav = planner.speeds.t_nav;
    let mut out = McNavState {
        nav_mode: inp.nav_mode,
        cf_mode: inp.cf_mode,
        cmd: NavCommand::STOP,
        leg: None,
        plan_failed: prev.plan_failed,
    };
    if inp.nav_mode == Mode::Ac {
        out.cmd = match inp.cf_mode {
            Mode::Ac => blended_go_to_target(inp.pose, inp.target, inp.ir, plant, nav, t_nav),
            Mode::Bc => NavCommand::STOP,
        }
        .clamped(plant);
        return out;
    }
    let mut leg = match &prev.leg {
        Some(l) if l.target == inp.target => l.clone(),
        _ => match plan_leg(&planner.map, inp.pose.p, Some(inp.pose.theta), inp.target, &planner.speeds) {
            Ok(plan) => LegPlan {
                target: inp.target,
                start_tick: inp.tick,
                bound: plan.bound,
                steps: plan.steps(&planner.speeds),
                done_tick: -1,
            },
            Err(_) => {
                out.plan_failed = true;
                return out;
            }
        },
    };
    match leg.steps.first_mut() {
        Some((cmd, n)) => {
            out.cmd = *cmd;
            *n -= 1;
            if *n == 0 {
                leg.steps.remove(0);
                if leg.steps.is_empty() {
                    leg.done_tick = inp.tick + inp.period;
                }
            }
        }
        None if leg.done_tick < 0 => leg.done_tick = inp.tick,
        None => {}
    }
    out.leg = Some(leg);
    out
}

/// Nav for mission completion: the CF-wrapped AC and the primitive BC.
pub fn mc_nav_component(planner: Arc<McPlanner>, plant: Arc<PlantParams>, nav: NavParams, period: u64) -> Component {
    let outer = SimplexInstance::new("Nav", period, vars::NAV_MODE, Predicate::atom("false", |_| Ok(false)))
        .switch_in(vars::CTLR);
    let inner = cf_instance(plant.clone(), nav.clone(), period);
    Component::builder("Nav")
        .state([vars::NAV_MODE, vars::CF_MODE, vars::NAV_STATE])
        .inputs([vars::T, vars::CTLR, vars::P, vars::THETA, vars::IR])
        .outputs([vars::V_T, vars::OMEGA_T, vars::DOCK])
        .rate(
            RateEntry::new(period, move |view| {
                let nav_mode = outer.decide(view)?;
                let cf_mode = if nav_mode == Mode::Ac { inner.decide(view)? } else { view.decode(vars::CF_MODE)? };
                let prev: McNavState = view.decode(vars::NAV_STATE)?;
                let ir = read_ir(view)?;
                let inputs = McNavInputs {
                    tick: view.tick() as i64,
                    period: period as i64,
                    pose: Pose::new(view.vec2(vars::P)?, view.real(vars::THETA)?),
                    target: view.vec2(vars::T)?,
                    ir: &ir,
                    nav_mode,
                    cf_mode,
                };
                let d = mc_nav_step(&prev, &inputs, &planner, &plant, &nav);
                Ok(vec![
                    (vars::NAV_MODE.into(), d.nav_mode.encode()),
                    (vars::CF_MODE.into(), d.cf_mode.encode()),
                    (vars::NAV_STATE.into(), d.encode()),
                ])
            })
            .with_output(|view| {
                let d: McNavState = view.decode(vars::NAV_STATE)?;
                Ok(vec![
                    (vars::V_T.into(), Value::Real(d.cmd.v)),
                    (vars::OMEGA_T.into(), Value::Real(d.cmd.omega)),
                    (vars::DOCK.into(), Value::Bool(false)),
                ])
            }),
        )
        .build()
        .expect("mc nav variable sets are disjoint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::{BcSpeeds, GridMap};
    use crate::plant::{integrate_pose, RoverState};

    fn planner(targets: Vec<Point>) -> McPlanner {
        let map = GridMap::empty([-1.5, -1.5], 60, 60, 0.05);
        let s = BcSpeeds { v_bc: 0.4, omega_bc: std::f64::consts::PI, t_nav: 0.1, eps_t: 0.1 };
        McPlanner::new(map, s, targets, 0.2)
    }

    #[test]
    fn bc_executor_reaches_target_within_bound() {
        let target = [0.8, 0.6];
        let pl = planner(vec![target]);
        let plant = PlantParams::default();
        let nav = NavParams::default();
        let mut state = McNavState::initial();
        let mut rover = RoverState::at([-0.93, -0.41], 2.0, 100.0);
        let mut tick = 2;
        loop {
            let inp = McNavInputs {
                tick,
                period: 2,
                pose: Pose::new(rover.p, rover.theta),
                target,
                ir: &[],
                nav_mode: Mode::Bc,
                cf_mode: Mode::Ac,
            };
            state = mc_nav_step(&state, &inp, &pl, &plant, &nav);
            rover = integrate_pose(&rover, state.cmd.v, state.cmd.omega, 0.1);
            tick += 2;
            let leg = state.leg.clone().unwrap();
            if leg.done_tick >= 0 {
                assert_eq!(leg.done_tick, tick);
                let measured = (leg.done_tick - leg.start_tick) as f64 * 0.05;
                assert!(measured <= leg.bound + 1e-9, "{measured} > {}", leg.bound);
                break;
            }
        }
        assert!(dist(rover.p, target) < 1e-9);
    }

    #[test]
    fn detour_is_seeded() {
        let b = ([-1.5, -1.5], [1.5, 1.5]);
        let a = detour_point(7, 0, [0.0, 0.0], [1.0, 0.0], 0.4, b);
        assert_eq!(a, detour_point(7, 0, [0.0, 0.0], [1.0, 0.0], 0.4, b));
        assert_ne!(a, detour_point(8, 0, [0.0, 0.0], [1.0, 0.0], 0.4, b));
        assert!(dist(a, [0.5, 0.0]) <= 0.4 + 1e-12);
    }

    #[test]
    fn state_codecs_round_trip() {
        let pl = planner(vec![[0.5, 0.5]]);
        let mut s = McNavState::initial();
        let inp = McNavInputs {
            tick: 4,
            period: 2,
            pose: Pose::new([0.0, 0.0], 0.0),
            target: [0.5, 0.5],
            ir: &[],
            nav_mode: Mode::Bc,
            cf_mode: Mode::Ac,
        };
        s = mc_nav_step(&s, &inp, &pl, &PlantParams::default(), &NavParams::default());
        assert_eq!(McNavState::decode(&s.encode()).unwrap(), s);
    }
}
