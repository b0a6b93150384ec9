//! Navigation: go-to-target with IR blending, the collision-freedom DM, the
//! waypoint recorder and the least-squares backtracker.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assurance::{Mode, Predicate, SimplexInstance};
use crate::geometry::{self, wrap_angle, Point};
use crate::plant::{command_power, sinc, PlantParams};
use crate::sync::{Codec, Component, RateEntry, SeqReader, StepError, Value, VarId, View};
use crate::vars;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavParams {
    /// Proportional heading gain.
    pub k_heading: f64,
    /// Margin `δ` of the collision-freedom DM.
    pub safety_margin: f64,
    pub arrival_radius: f64,
    /// IR readings below this distance push the heading away.
    pub avoid_range: f64,
    pub avoid_gain: f64,
}

impl Default for NavParams {
    fn default() -> Self {
        NavParams {
            k_heading: 8.0,
            safety_margin: 0.08,
            arrival_radius: 0.02,
            avoid_range: 0.5,
            avoid_gain: 1.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub p: Point,
    pub theta: f64,
}

impl Pose {
    pub fn new(p: Point, theta: f64) -> Self {
        Pose { p, theta }
    }

    pub fn reversed(self) -> Pose {
        Pose { p: self.p, theta: self.theta + PI }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NavCommand {
    pub v: f64,
    pub omega: f64,
}

impl NavCommand {
    pub const STOP: NavCommand = NavCommand { v: 0.0, omega: 0.0 };

    pub fn clamped(self, plant: &PlantParams) -> NavCommand {
        let (v, omega) = plant.clamp_command(self.v, self.omega);
        NavCommand { v, omega }
    }

    pub fn power(self, plant: &PlantParams) -> f64 {
        command_power(self.v, self.omega, plant)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum NavError {
    #[error("backtrack log is empty")]
    EmptyLog,
}

/// Heading-proportional steering toward `target`.
pub fn go_to_target(pose: Pose, target: Point, plant: &PlantParams, nav: &NavParams, t_nav: f64) -> NavCommand {
    let to = geometry::sub(target, pose.p);
    let d = geometry::norm(to);
    if d <= nav.arrival_radius {
        return NavCommand::STOP;
    }
    steer(pose, to[1].atan2(to[0]), d, plant, nav, t_nav)
}

fn steer(pose: Pose, desired: f64, d: f64, plant: &PlantParams, nav: &NavParams, t_nav: f64) -> NavCommand {
    let err = wrap_angle(desired - pose.theta);
    let omega = (nav.k_heading * err).clamp(-plant.omega_max, plant.omega_max);
    let v = (plant.v_max * err.cos().max(0.0)).min(d / t_nav);
    NavCommand { v, omega }
}

/// The advanced controller: go-to-target, with the heading bent away from
/// IR returns closer than `avoid_range`. Identical to [`go_to_target`] when
/// nothing is that close.
pub fn blended_go_to_target(
    pose: Pose,
    target: Point,
    ir: &[f64],
    plant: &PlantParams,
    nav: &NavParams,
    t_nav: f64,
) -> NavCommand {
    let to = geometry::sub(target, pose.p);
    let d = geometry::norm(to);
    if d <= nav.arrival_radius {
        return NavCommand::STOP;
    }
    let mut push = [0.0, 0.0];
    let mut near = false;
    for (k, r) in ir.iter().enumerate() {
        if *r < nav.avoid_range {
            near = true;
            let w = (nav.avoid_range - r) / nav.avoid_range;
            let away = geometry::unit(pose.theta + plant.sensor_heading(k) + PI);
            push = geometry::add(push, geometry::scale(away, w));
        }
    }
    if !near {
        return steer(pose, to[1].atan2(to[0]), d, plant, nav, t_nav);
    }
    let mut g = geometry::scale(to, 1.0 / d);
    let n = geometry::norm(push);
    if n > 0.0 {
        let away = geometry::scale(push, 1.0 / n);
        let along = geometry::dot(g, away);
        if along < 0.0 {
            // slide along the obstacle instead of pushing into it
            g = geometry::sub(g, geometry::scale(away, along));
            if geometry::norm(g) < 1e-6 {
                g = [-away[1], away[0]];
            }
            g = geometry::scale(g, 1.0 / geometry::norm(g));
        }
    }
    let u = geometry::add(g, geometry::scale(push, nav.avoid_gain));
    steer(pose, u[1].atan2(u[0]), d, plant, nav, t_nav)
}

/// The collision-freedom baseline: stop.
pub fn avoid_obstacles() -> NavCommand {
    NavCommand::STOP
}

/// BC2 iff the rover could close to within `δ` of a sensed obstacle before
/// the next Nav decision.
pub fn cf_dm(ir: &[f64], plant: &PlantParams, nav: &NavParams, t_nav: f64) -> Mode {
    let closest = ir.iter().copied().fold(f64::INFINITY, f64::min);
    if closest - plant.v_max * t_nav <= nav.safety_margin {
        Mode::Bc
    } else {
        Mode::Ac
    }
}

/// Constant `(v, ω)` taking `from` to `to` in `t` seconds, in the
/// least-squares sense for the position equations of the arc.
///
/// The heading equation fixes `ω` exactly; `v` then minimises the squared
/// residual of the two position equations.
pub fn solve_reach(from: Pose, to: Pose, t: f64) -> NavCommand {
    let dtheta = wrap_angle(to.theta - from.theta);
    let d = geometry::sub(to.p, from.p);
    if dtheta == 0.0 {
        return NavCommand { v: geometry::norm(d) / t, omega: 0.0 };
    }
    let omega = dtheta / t;
    let half = dtheta / 2.0;
    let chord = t * sinc(half);
    let mid = from.theta + half;
    let a = chord * mid.cos();
    let b = chord * mid.sin();
    NavCommand {
        v: (a * d[0] + b * d[1]) / (a * a + b * b),
        omega,
    }
}

/// Squared residual of the position equations for `(v, ω)` from `from` to `to`.
pub fn reach_residual(from: Pose, to: Pose, v: f64, omega: f64, t: f64) -> f64 {
    let half = omega * t / 2.0;
    let chord = v * t * sinc(half);
    let mid = from.theta + half;
    let ex = from.p[0] + chord * mid.cos() - to.p[0];
    let ey = from.p[1] + chord * mid.sin() - to.p[1];
    ex * ex + ey * ey
}

/// Energy of retracing the recorded forward segment `older → newer`.
pub fn segment_energy(older: Pose, newer: Pose, plant: &PlantParams, t: f64) -> f64 {
    solve_reach(newer.reversed(), older.reversed(), t)
        .clamped(plant)
        .power(plant)
        * t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub pose: Pose,
    /// Tick of the Nav decision that recorded it.
    pub tick: i64,
    /// Cumulative energy use when recorded.
    pub e_mark: f64,
    /// Energy to retrace from this waypoint to the previous one.
    pub seg_energy: f64,
    /// Energy to retrace from this waypoint to the anchor.
    pub be_cum: f64,
}

impl Codec for Waypoint {
    fn encode(&self) -> Value {
        Value::seq(vec![
            Value::Vec2(self.pose.p),
            Value::Real(self.pose.theta),
            Value::Int(self.tick),
            Value::Real(self.e_mark),
            Value::Real(self.seg_energy),
            Value::Real(self.be_cum),
        ])
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        let mut r = SeqReader::new("waypoint", value)?;
        Ok(Waypoint {
            pose: Pose::new(r.vec2()?, r.real()?),
            tick: r.int()?,
            e_mark: r.real()?,
            seg_energy: r.real()?,
            be_cum: r.real()?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchor {
    /// Station index, or -1 when the log was started away from a station.
    pub ps: i64,
    pub tick: i64,
    pub e_mark: f64,
}

/// The waypoint log `W`: a persistent stack, newest waypoint on top and the
/// anchor at the bottom. Appending and popping share structure with the
/// previous log, so snapshots stay cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct WaypointLog(Value);

impl Default for WaypointLog {
    fn default() -> Self {
        WaypointLog::empty()
    }
}

impl WaypointLog {
    pub fn empty() -> Self {
        WaypointLog(Value::seq(Vec::new()))
    }

    pub fn anchored(ps: i64, mut wp: Waypoint) -> Self {
        wp.seg_energy = 0.0;
        wp.be_cum = 0.0;
        let anchor = Anchor { ps, tick: wp.tick, e_mark: wp.e_mark };
        WaypointLog::node(wp, WaypointLog::empty(), 1, anchor)
    }

    fn node(wp: Waypoint, tail: WaypointLog, len: i64, anchor: Anchor) -> Self {
        WaypointLog(Value::seq(vec![
            wp.encode(),
            tail.0,
            Value::Int(len),
            Value::Int(anchor.ps),
            Value::Int(anchor.tick),
            Value::Real(anchor.e_mark),
        ]))
    }

    fn parts(&self) -> Option<&[Value]> {
        match self.0.as_seq() {
            Some(items) if !items.is_empty() => Some(items.as_slice()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.parts()
            .and_then(|p| p[2].as_int())
            .map_or(0, |n| n as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.parts().is_none()
    }

    pub fn head(&self) -> Option<Waypoint> {
        self.parts().and_then(|p| Waypoint::decode(&p[0]).ok())
    }

    pub fn anchor(&self) -> Option<Anchor> {
        let p = self.parts()?;
        Some(Anchor {
            ps: p[3].as_int()?,
            tick: p[4].as_int()?,
            e_mark: p[5].as_real()?,
        })
    }

    /// Top waypoint and the log beneath it.
    pub fn pop(&self) -> Option<(Waypoint, WaypointLog)> {
        let p = self.parts()?;
        Some((Waypoint::decode(&p[0]).ok()?, WaypointLog(p[1].clone())))
    }

    pub fn push(&self, wp: Waypoint) -> WaypointLog {
        match self.anchor() {
            Some(anchor) => WaypointLog::node(wp, self.clone(), self.len() as i64 + 1, anchor),
            None => WaypointLog::anchored(-1, wp),
        }
    }

    /// Waypoints from newest to anchor.
    pub fn iter(&self) -> impl Iterator<Item = Waypoint> + '_ {
        let mut cur = self.clone();
        std::iter::from_fn(move || {
            let (wp, rest) = cur.pop()?;
            cur = rest;
            Some(wp)
        })
    }

    /// Waypoints from anchor to newest.
    pub fn to_vec(&self) -> Vec<Waypoint> {
        let mut v: Vec<Waypoint> = self.iter().collect();
        v.reverse();
        v
    }

    /// Backtrack energy from the newest waypoint to the anchor.
    pub fn backtrack_energy(&self) -> f64 {
        self.head().map_or(0.0, |h| h.be_cum)
    }
}

impl Codec for WaypointLog {
    fn encode(&self) -> Value {
        self.0.clone()
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        match value.as_seq() {
            Some(items) if items.is_empty() || items.len() == 6 => Ok(WaypointLog(value.clone())),
            _ => Err(StepError::Decode {
                what: "waypoint log",
                detail: format!("unexpected shape {}", value.type_name()),
            }),
        }
    }
}

/// Appends the pose to `log`, or restarts the log when a station is in
/// range. Segment energies are those of retracing each step.
pub fn record_waypoint(
    log: &WaypointLog,
    pose: Pose,
    tick: i64,
    e_used: f64,
    visible_ps: Option<usize>,
    plant: &PlantParams,
    t_nav: f64,
) -> WaypointLog {
    let wp = Waypoint { pose, tick, e_mark: e_used, seg_energy: 0.0, be_cum: 0.0 };
    if let Some(ps) = visible_ps {
        return WaypointLog::anchored(ps as i64, wp);
    }
    match log.head() {
        None => WaypointLog::anchored(-1, wp),
        Some(prev) => {
            let seg = segment_energy(prev.pose, pose, plant, t_nav);
            log.push(Waypoint { seg_energy: seg, be_cum: prev.be_cum + seg, ..wp })
        }
    }
}

/// Command taking the (already reversed) rover to the top waypoint of `log`
/// in one Nav period, and the log left after consuming it.
pub fn backtrack_step(
    pose: Pose,
    log: &WaypointLog,
    plant: &PlantParams,
    t_nav: f64,
) -> Result<(NavCommand, WaypointLog), NavError> {
    let (wp, rest) = log.pop().ok_or(NavError::EmptyLog)?;
    let cmd = solve_reach(pose, wp.pose.reversed(), t_nav).clamped(plant);
    Ok((cmd, rest))
}

/// Angular speeds of the in-place half turn, one per Nav period: full
/// `ω_max` until the remainder fits in one period.
pub fn turn_schedule(plant: &PlantParams, t_nav: f64) -> Vec<f64> {
    let mut remaining = PI;
    let mut out = Vec::new();
    while remaining > 0.0 {
        let w = plant.omega_max.min(remaining / t_nav);
        out.push(w);
        remaining = if w == plant.omega_max { remaining - w * t_nav } else { 0.0 };
    }
    out
}

/// Energy of the half turn as scheduled by the Nav BC.
pub fn turn_energy(plant: &PlantParams, t_nav: f64) -> f64 {
    turn_schedule(plant, t_nav)
        .iter()
        .map(|w| command_power(0.0, *w, plant) * t_nav)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NavPhase {
    /// Mission control: record waypoints, run the CF Simplex.
    Forward,
    /// Half turn at the recorded point `at`, with `remaining` radians to go.
    Turning { at: Pose, remaining: f64 },
    Backtracking,
    Docked,
    /// Log exhausted with no station in range.
    Stranded,
}

impl NavPhase {
    pub fn name(&self) -> &'static str {
        match self {
            NavPhase::Forward => "forward",
            NavPhase::Turning { .. } => "turning",
            NavPhase::Backtracking => "backtracking",
            NavPhase::Docked => "docked",
            NavPhase::Stranded => "stranded",
        }
    }
}

impl Codec for NavPhase {
    fn encode(&self) -> Value {
        match *self {
            NavPhase::Forward => Value::seq(vec![Value::Int(0)]),
            NavPhase::Turning { at, remaining } => Value::seq(vec![
                Value::Int(1),
                Value::Vec2(at.p),
                Value::Real(at.theta),
                Value::Real(remaining),
            ]),
            NavPhase::Backtracking => Value::seq(vec![Value::Int(2)]),
            NavPhase::Docked => Value::seq(vec![Value::Int(3)]),
            NavPhase::Stranded => Value::seq(vec![Value::Int(4)]),
        }
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        let mut r = SeqReader::new("nav phase", value)?;
        Ok(match r.int()? {
            0 => NavPhase::Forward,
            1 => NavPhase::Turning {
                at: Pose::new(r.vec2()?, r.real()?),
                remaining: r.real()?,
            },
            2 => NavPhase::Backtracking,
            3 => NavPhase::Docked,
            4 => NavPhase::Stranded,
            k => {
                return Err(StepError::Decode {
                    what: "nav phase",
                    detail: format!("unknown tag {k}"),
                })
            }
        })
    }
}

/// Outer Nav Simplex: follows the hardwired `ctlr` line.
pub fn nav_instance(period: u64) -> SimplexInstance {
    SimplexInstance::new("Nav", period, vars::NAV_MODE, Predicate::atom("false", |_| Ok(false)))
        .switch_in(vars::CTLR)
}

/// Inner collision-freedom Simplex wrapped around the Nav AC.
pub fn cf_instance(plant: Arc<PlantParams>, nav: NavParams, period: u64) -> SimplexInstance {
    let dm = Predicate::atom("cf_dm", move |view| {
        let ir = read_ir(view)?;
        let t_nav = period as f64 * view.dt();
        Ok(cf_dm(&ir, &plant, &nav, t_nav).is_bc())
    });
    SimplexInstance::new("CF", period, vars::CF_MODE, dm)
}

pub fn read_ir(view: &View<'_>) -> Result<Vec<f64>, StepError> {
    view.seq(vars::IR)?
        .iter()
        .map(|v| {
            v.as_real().ok_or_else(|| StepError::TypeMismatch {
                var: VarId::new(vars::IR),
                expected: "real",
                found: v.type_name(),
            })
        })
        .collect()
}

/// Result of one Nav decision.
#[derive(Clone, Debug, PartialEq)]
pub struct NavDecision {
    pub nav_mode: Mode,
    pub cf_mode: Mode,
    pub phase: NavPhase,
    pub cmd: NavCommand,
    pub dock: bool,
    pub log: WaypointLog,
    pub be: f64,
    pub be_rate: f64,
}

/// Inputs of one Nav decision.
#[derive(Clone, Debug)]
pub struct NavInputs<'a> {
    pub tick: i64,
    pub pose: Pose,
    pub target: Point,
    pub ir: &'a [f64],
    pub visible_ps: Option<usize>,
    pub e_used: f64,
    pub nav_mode: Mode,
    pub cf_mode: Mode,
    pub phase: NavPhase,
    pub log: WaypointLog,
}

/// The Nav component's decision logic, outside of the store plumbing.
pub fn nav_component_step(inp: &NavInputs<'_>, plant: &PlantParams, nav: &NavParams, t_nav: f64) -> NavDecision {
    if inp.nav_mode == Mode::Ac {
        let log = record_waypoint(&inp.log, inp.pose, inp.tick, inp.e_used, inp.visible_ps, plant, t_nav);
        let cmd = match inp.cf_mode {
            Mode::Ac => blended_go_to_target(inp.pose, inp.target, inp.ir, plant, nav, t_nav),
            Mode::Bc => avoid_obstacles(),
        }
        .clamped(plant);
        return NavDecision {
            nav_mode: Mode::Ac,
            cf_mode: inp.cf_mode,
            phase: NavPhase::Forward,
            cmd,
            dock: false,
            be: log.backtrack_energy(),
            be_rate: cmd.power(plant),
            log,
        };
    }

    let mut phase = match inp.phase {
        NavPhase::Forward => NavPhase::Turning { at: inp.pose, remaining: PI },
        other => other,
    };
    let mut out = NavDecision {
        nav_mode: Mode::Bc,
        cf_mode: inp.cf_mode,
        phase,
        cmd: NavCommand::STOP,
        dock: false,
        log: inp.log.clone(),
        be: 0.0,
        be_rate: 0.0,
    };

    if let NavPhase::Turning { at, remaining } = phase {
        if remaining > 0.0 {
            let w = plant.omega_max.min(remaining / t_nav);
            let left = if w == plant.omega_max { remaining - w * t_nav } else { 0.0 };
            out.phase = NavPhase::Turning { at, remaining: left };
            out.cmd = NavCommand { v: 0.0, omega: w };
            out.be = match inp.log.head() {
                Some(h) => segment_energy(h.pose, at, plant, t_nav) + h.be_cum,
                None => 0.0,
            };
            return out;
        }
        phase = NavPhase::Backtracking;
    }

    match phase {
        NavPhase::Backtracking => match backtrack_step(inp.pose, &inp.log, plant, t_nav) {
            Ok((cmd, rest)) => {
                let head = inp.log.head().expect("non-empty log");
                out.phase = NavPhase::Backtracking;
                out.cmd = cmd;
                out.be = cmd.power(plant) * t_nav + head.be_cum;
                out.be_rate = -cmd.power(plant);
                out.log = rest;
            }
            Err(NavError::EmptyLog) => {
                out.phase = if inp.visible_ps.is_some() { NavPhase::Docked } else { NavPhase::Stranded };
                out.dock = inp.visible_ps.is_some();
            }
        },
        NavPhase::Docked => {
            out.phase = NavPhase::Docked;
            out.dock = true;
        }
        other => out.phase = other,
    }
    out
}

impl Codec for NavDecision {
    fn encode(&self) -> Value {
        Value::seq(vec![
            self.nav_mode.encode(),
            self.cf_mode.encode(),
            self.phase.encode(),
            Value::Real(self.cmd.v),
            Value::Real(self.cmd.omega),
            Value::Bool(self.dock),
            self.log.encode(),
            Value::Real(self.be),
            Value::Real(self.be_rate),
        ])
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        let mut r = SeqReader::new("nav state", value)?;
        Ok(NavDecision {
            nav_mode: r.decode()?,
            cf_mode: r.decode()?,
            phase: r.decode()?,
            cmd: NavCommand { v: r.real()?, omega: r.real()? },
            dock: r.bool()?,
            log: r.decode()?,
            be: r.real()?,
            be_rate: r.real()?,
        })
    }
}

impl NavDecision {
    /// Nav memory before the first decision.
    pub fn initial() -> Self {
        NavDecision {
            nav_mode: Mode::Ac,
            cf_mode: Mode::Ac,
            phase: NavPhase::Forward,
            cmd: NavCommand::STOP,
            dock: false,
            log: WaypointLog::empty(),
            be: 0.0,
            be_rate: 0.0,
        }
    }
}

/// The Navigation component. Fires every `period` ticks: the next-state
/// function runs the two Simplex instances and the controllers and keeps the
/// decision in `nav_state`; the output function publishes it.
pub fn nav_component(plant: Arc<PlantParams>, nav: NavParams, period: u64) -> Component {
    let outer = nav_instance(period);
    let inner = cf_instance(plant.clone(), nav.clone(), period);
    Component::builder("Nav")
        .state([vars::NAV_MODE, vars::CF_MODE, vars::NAV_STATE])
        .inputs([
            vars::T,
            vars::CTLR,
            vars::P,
            vars::THETA,
            vars::IR,
            vars::PS_VISIBLE,
            vars::E_USED,
        ])
        .outputs([vars::V_T, vars::OMEGA_T, vars::DOCK, vars::W, vars::BE, vars::BE_RATE])
        .rate(
            RateEntry::new(period, move |view| {
                let t_nav = period as f64 * view.dt();
                let nav_mode = outer.decide(view)?;
                let cf_mode = if nav_mode == Mode::Ac {
                    inner.decide(view)?
                } else {
                    view.decode(vars::CF_MODE)?
                };
                let memory: NavDecision = view.decode(vars::NAV_STATE)?;
                let ps = view.int(vars::PS_VISIBLE)?;
                let ir = read_ir(view)?;
                let inputs = NavInputs {
                    tick: view.tick() as i64,
                    pose: Pose::new(view.vec2(vars::P)?, view.real(vars::THETA)?),
                    target: view.vec2(vars::T)?,
                    ir: &ir,
                    visible_ps: (ps >= 0).then_some(ps as usize),
                    e_used: view.real(vars::E_USED)?,
                    nav_mode,
                    cf_mode,
                    phase: memory.phase,
                    log: memory.log,
                };
                let d = nav_component_step(&inputs, &plant, &nav, t_nav);
                Ok(vec![
                    (vars::NAV_MODE.into(), d.nav_mode.encode()),
                    (vars::CF_MODE.into(), d.cf_mode.encode()),
                    (vars::NAV_STATE.into(), d.encode()),
                ])
            })
            .with_output(|view| {
                let d: NavDecision = view.decode(vars::NAV_STATE)?;
                Ok(nav_outputs(&d))
            }),
        )
        .build()
        .expect("nav variable sets are disjoint")
}

pub fn nav_outputs(d: &NavDecision) -> Vec<(VarId, Value)> {
    vec![
        (vars::V_T.into(), Value::Real(d.cmd.v)),
        (vars::OMEGA_T.into(), Value::Real(d.cmd.omega)),
        (vars::DOCK.into(), Value::Bool(d.dock)),
        (vars::W.into(), d.log.encode()),
        (vars::BE.into(), Value::Real(d.be)),
        (vars::BE_RATE.into(), Value::Real(d.be_rate)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{integrate_pose, RoverState};

    fn plant() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn target_ahead_full_speed() {
        let cmd = go_to_target(Pose::new([0.0, 0.0], 0.0), [1.0, 0.0], &plant(), &NavParams::default(), 0.1);
        assert_eq!(cmd, NavCommand { v: 0.8, omega: 0.0 });
    }

    #[test]
    fn target_behind_turns_in_place() {
        let p = plant();
        let cmd = go_to_target(Pose::new([0.0, 0.0], 0.0), [-1.0, 0.0], &p, &NavParams::default(), 0.1);
        assert_eq!(cmd.omega.abs(), p.omega_max);
        assert!(cmd.v.abs() < 1e-12);
    }

    #[test]
    fn go_to_target_converges_in_empty_world() {
        let p = plant();
        let nav = NavParams::default();
        let mut s = RoverState::at([-1.0, 0.0], 0.0, 100.0);
        let t = 0.1;
        let mut steps = 0;
        while geometry::dist(s.p, [1.2, 0.0]) > nav.arrival_radius {
            let c = go_to_target(Pose::new(s.p, s.theta), [1.2, 0.0], &p, &nav, t);
            s = integrate_pose(&s, c.v, c.omega, t);
            steps += 1;
            assert!(steps < 1000);
        }
        let mut s = RoverState::at([0.0, 0.0], 2.5, 100.0);
        steps = 0;
        while geometry::dist(s.p, [0.3, -1.2]) > nav.arrival_radius {
            let c = go_to_target(Pose::new(s.p, s.theta), [0.3, -1.2], &p, &nav, t);
            s = integrate_pose(&s, c.v, c.omega, t);
            steps += 1;
            assert!(steps < 1000);
        }
    }

    #[test]
    fn cf_dm_examples() {
        let p = plant();
        let nav = NavParams { safety_margin: 0.05, ..NavParams::default() };
        assert_eq!(cf_dm(&[0.8; 8], &p, &nav, 0.1), Mode::Ac);
        let mut ir = [0.8; 8];
        ir[3] = 0.10;
        assert_eq!(cf_dm(&ir, &p, &nav, 0.1), Mode::Bc);
        ir[3] = 0.0;
        assert_eq!(cf_dm(&ir, &p, &NavParams { safety_margin: 0.0, ..nav }, 0.1), Mode::Bc);
    }

    #[test]
    fn avoid_obstacles_stops() {
        assert_eq!(avoid_obstacles(), NavCommand::STOP);
        assert_eq!(avoid_obstacles(), avoid_obstacles());
    }

    #[test]
    fn trivial_case_straight_line() {
        let cmd = solve_reach(Pose::new([0.0, 0.0], 0.0), Pose::new([0.06, 0.0], 0.0), 0.1);
        assert!((cmd.v - 0.6).abs() < 1e-12);
        assert_eq!(cmd.omega, 0.0);
    }

    #[test]
    fn arc_round_trip() {
        let a = RoverState::at([0.0, 0.0], 0.0, 1.0);
        let b = integrate_pose(&a, 0.5, 5.0 * PI, 0.1);
        let cmd = solve_reach(Pose::new(a.p, a.theta), Pose::new(b.p, b.theta), 0.1);
        assert!((cmd.v - 0.5).abs() < 1e-9);
        assert!((cmd.omega - 5.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn reversed_arc_retraces_forward_arc() {
        let p = plant();
        let a = RoverState::at([0.2, 0.1], 0.4, 1.0);
        let b = integrate_pose(&a, 0.7, -3.0, 0.1);
        let log = WaypointLog::anchored(0, Waypoint {
            pose: Pose::new(a.p, a.theta),
            tick: 0,
            e_mark: 0.0,
            seg_energy: 0.0,
            be_cum: 0.0,
        });
        let (cmd, rest) = backtrack_step(Pose::new(b.p, b.theta + PI), &log, &p, 0.1).unwrap();
        assert!(rest.is_empty());
        assert!((cmd.v - 0.7).abs() < 1e-12 && (cmd.omega - 3.0).abs() < 1e-12);
        let back = integrate_pose(&RoverState { theta: b.theta + PI, ..b }, cmd.v, cmd.omega, 0.1);
        assert!(geometry::dist(back.p, a.p) < 1e-12);
        assert!(matches!(backtrack_step(Pose::new(b.p, 0.0), &rest, &p, 0.1), Err(NavError::EmptyLog)));
    }

    #[test]
    fn log_records_and_reanchors() {
        let p = plant();
        let mut log = WaypointLog::empty();
        let mut s = RoverState::at([0.0, 0.0], 0.0, 1.0);
        log = record_waypoint(&log, Pose::new(s.p, s.theta), 2, 0.0, Some(0), &p, 0.1);
        assert_eq!(log.len(), 1);
        for k in 0..5 {
            s = integrate_pose(&s, 0.5, 1.0, 0.1);
            log = record_waypoint(&log, Pose::new(s.p, s.theta), 4 + 2 * k, 0.0, None, &p, 0.1);
        }
        assert_eq!(log.len(), 6);
        let ticks: Vec<i64> = log.to_vec().iter().map(|w| w.tick).collect();
        assert!(ticks.windows(2).all(|w| w[0] < w[1]));
        let expect = 5.0 * crate::plant::command_power(0.5, 1.0, &p) * 0.1;
        assert!((log.backtrack_energy() - expect).abs() < 1e-9);
        log = record_waypoint(&log, Pose::new(s.p, s.theta), 20, 3.0, Some(2), &p, 0.1);
        assert_eq!(log.len(), 1);
        assert_eq!(log.anchor().unwrap().ps, 2);
    }

    #[test]
    fn turn_is_two_periods_at_default_rates() {
        let p = plant();
        let sched = turn_schedule(&p, 0.1);
        assert_eq!(sched.len(), 2);
        assert!((sched.iter().sum::<f64>() * 0.1 - PI).abs() < 1e-12);
        let e = turn_energy(&p, 0.1);
        assert!(e <= 1.524 && e > 1.4);
    }

    #[test]
    fn phase_codec_round_trip() {
        for ph in [
            NavPhase::Forward,
            NavPhase::Turning { at: Pose::new([1.0, 2.0], 0.5), remaining: 1.0 },
            NavPhase::Backtracking,
            NavPhase::Docked,
            NavPhase::Stranded,
        ] {
            assert_eq!(NavPhase::decode(&ph.encode()).unwrap(), ph);
        }
    }
}
