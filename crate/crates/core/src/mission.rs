//! Mission planning for energy safety: target sequencing, the recharge BC,
//! forward-energy accounting and the switching condition.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assurance::{resolve, Mode, Predicate, SimplexInstance};
use crate::geometry::{dist, Point};
use crate::navigation::{turn_energy, WaypointLog};
use crate::plant::PlantParams;
use crate::sync::{Codec, Component, RateEntry, SeqReader, StepError, Value, VarId};
use crate::vars;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConstants {
    /// Worst-case energy drawn in one MP period.
    pub e_mp: f64,
    /// Energy of the in-place half turn.
    pub e_180: f64,
    /// Bound on the growth of the backtrack energy over one MP period.
    pub be_mp: f64,
    pub eps_be: f64,
    /// Skip the load-time check against the derived worst cases. Only for
    /// falsification scenarios.
    pub unchecked: bool,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            e_mp: 2.032,
            e_180: 1.524,
            be_mp: 2.032,
            eps_be: 0.0,
            unchecked: false,
        }
    }
}

impl EnergyConstants {
    /// Switching threshold at forward energy `fe`.
    pub fn threshold(&self, fe: f64) -> f64 {
        self.e_mp + self.e_180 + self.be_mp + backtrack_energy_bound(fe, self.eps_be)
    }
}

/// Worst-case energy of one MP period: full power for `s_mp · dt`.
pub fn derived_e_mp(plant: &PlantParams, s_mp: u64, dt: f64) -> f64 {
    plant.max_power() * s_mp as f64 * dt
}

/// Energy of the half turn as the Nav BC executes it.
pub fn derived_e_180(plant: &PlantParams, s_nav: u64, dt: f64) -> f64 {
    turn_energy(plant, s_nav as f64 * dt)
}

pub fn backtrack_energy_bound(fe: f64, eps_be: f64) -> f64 {
    (1.0 + eps_be) * fe
}

/// Switch to BC iff `B ≤ E_MP + E_180 + BE_MP + (1 + ε_BE)·FE`.
pub fn mp_dm_switch(b: f64, fe: f64, k: &EnergyConstants) -> bool {
    b <= k.threshold(fe)
}

/// `E(p, PS)`: energy needed to get back to the last station.
pub fn es_energy_requirement(ctlr: Mode, be: f64, e_180: f64) -> f64 {
    match ctlr {
        Mode::Ac => e_180 + be,
        Mode::Bc => be,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionState {
    pub targets: Vec<Point>,
    pub next_index: usize,
    pub target: Point,
    pub ctlr: Mode,
    /// Station the waypoint log is anchored at (-1 if none).
    pub last_ps: i64,
    pub fe: f64,
    /// Cumulative energy reading at the last decision.
    pub e_seen: f64,
    /// Tick of the log anchor `fe` is measured from.
    pub anchor_tick: i64,
    pub complete: bool,
}

impl MissionState {
    pub fn new(targets: Vec<Point>, start_ps: i64) -> Self {
        let target = targets.first().copied().unwrap_or([0.0, 0.0]);
        MissionState {
            complete: targets.is_empty(),
            targets,
            next_index: 0,
            target,
            ctlr: Mode::Ac,
            last_ps: start_ps,
            fe: 0.0,
            e_seen: 0.0,
            anchor_tick: -1,
        }
    }

    pub fn visited(&self) -> usize {
        self.next_index
    }
}

impl Codec for MissionState {
    fn encode(&self) -> Value {
        Value::seq(vec![
            Value::seq(self.targets.iter().map(|t| Value::Vec2(*t)).collect()),
            Value::Int(self.next_index as i64),
            Value::Vec2(self.target),
            self.ctlr.encode(),
            Value::Int(self.last_ps),
            Value::Real(self.fe),
            Value::Real(self.e_seen),
            Value::Int(self.anchor_tick),
            Value::Bool(self.complete),
        ])
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        let mut r = SeqReader::new("mission state", value)?;
        let targets_v = r.next()?;
        let mut tr = SeqReader::new("targets", targets_v)?;
        let targets = (0..tr.len()).map(|_| tr.vec2()).collect::<Result<_, _>>()?;
        Ok(MissionState {
            targets,
            next_index: r.int()? as usize,
            target: r.vec2()?,
            ctlr: r.decode()?,
            last_ps: r.int()?,
            fe: r.real()?,
            e_seen: r.real()?,
            anchor_tick: r.int()?,
            complete: r.bool()?,
        })
    }
}

/// Advances to the next target once the rover is within `radius` of the
/// current one; marks the mission complete after the last.
pub fn choose_next_target(ms: &MissionState, p: Point, radius: f64) -> MissionState {
    let mut next = ms.clone();
    if ms.complete || dist(p, ms.target) > radius {
        return next;
    }
    next.next_index += 1;
    match ms.targets.get(next.next_index) {
        Some(t) => next.target = *t,
        None => next.complete = true,
    }
    next
}

/// The recharge BC: head for the last-visited station.
pub fn recharge_controller(ms: &MissionState, stations: &[Point]) -> MissionState {
    let mut next = ms.clone();
    if let Some(s) = usize::try_from(ms.last_ps).ok().and_then(|k| stations.get(k)) {
        next.target = *s;
    }
    next
}

pub fn forward_energy_accumulate(ms: &MissionState, consumed: f64) -> MissionState {
    MissionState { fe: ms.fe + consumed, ..ms.clone() }
}

/// Inputs of one MP decision.
#[derive(Clone, Copy, Debug)]
pub struct MpInputs<'a> {
    pub tick: i64,
    pub p: Point,
    pub battery: f64,
    pub e_used: f64,
    pub log: &'a WaypointLog,
}

/// Static configuration of the MP component.
#[derive(Clone, Debug)]
pub struct MpConfig {
    pub energy: EnergyConstants,
    pub stations: Vec<Point>,
    pub battery_capacity: f64,
    pub arrival_radius: f64,
}

/// One MP decision: account forward energy, sequence targets, run the DM.
pub fn mp_decide(ms: &MissionState, inp: &MpInputs<'_>, cfg: &MpConfig) -> MissionState {
    if ms.complete {
        return ms.clone();
    }
    let mut next = ms.clone();
    if ms.ctlr == Mode::Ac {
        match inp.log.anchor() {
            Some(a) if a.tick != ms.anchor_tick => {
                next.fe = inp.e_used - a.e_mark;
                next.anchor_tick = a.tick;
                next.last_ps = a.ps;
            }
            _ => next = forward_energy_accumulate(&next, inp.e_used - ms.e_seen),
        }
        next = choose_next_target(&next, inp.p, cfg.arrival_radius);
        if next.complete {
            next.e_seen = inp.e_used;
            return next;
        }
    }
    let released = ms.ctlr == Mode::Bc && inp.battery >= cfg.battery_capacity;
    if released {
        next.fe = 0.0;
        next.anchor_tick = inp.tick;
    }
    next.e_seen = inp.e_used;
    let fires = mp_dm_switch(inp.battery, next.fe, &cfg.energy);
    next.ctlr = resolve(ms.ctlr, false, fires, released);
    next = match next.ctlr {
        Mode::Bc => recharge_controller(&next, &cfg.stations),
        Mode::Ac => {
            let t = next.targets[next.next_index];
            MissionState { target: t, ..next }
        }
    };
    next
}

/// MP's Simplex instance as seen from the store: the energy threshold on `B` and `FE`,
/// sticky until the battery is full.
pub fn mp_instance(period: u64, energy: EnergyConstants, capacity: f64) -> SimplexInstance {
    let dm = Predicate::atom("B <= E_MP + E_180 + BE_MP + (1+eps)FE", move |v| {
        Ok(mp_dm_switch(v.real(vars::B)?, v.real(vars::FE)?, &energy))
    });
    let full = Predicate::atom("B >= B_max", move |v| Ok(v.real(vars::B)? >= capacity));
    SimplexInstance::new("MP", period, vars::CTLR, dm)
        .sticky_until(full)
        .switch_out(vars::CTLR)
}

pub fn mp_outputs(ms: &MissionState) -> Vec<(VarId, Value)> {
    vec![
        (vars::T.into(), Value::Vec2(ms.target)),
        (vars::CTLR.into(), ms.ctlr.encode()),
        (vars::FE.into(), Value::Real(ms.fe)),
        (vars::VISITED.into(), Value::Int(ms.visited() as i64)),
        (vars::DONE.into(), Value::Bool(ms.complete)),
    ]
}

/// The Mission Planning component, firing every `period` ticks.
pub fn mp_component(cfg: Arc<MpConfig>, period: u64) -> Component {
    Component::builder("MP")
        .state([vars::MISSION])
        .inputs([vars::P, vars::B, vars::E_USED, vars::W])
        .outputs([vars::T, vars::CTLR, vars::FE, vars::VISITED, vars::DONE])
        .rate(
            RateEntry::new(period, move |view| {
                let ms: MissionState = view.decode(vars::MISSION)?;
                let log: WaypointLog = view.decode(vars::W)?;
                let inp = MpInputs {
                    tick: view.tick() as i64,
                    p: view.vec2(vars::P)?,
                    battery: view.real(vars::B)?,
                    e_used: view.real(vars::E_USED)?,
                    log: &log,
                };
                Ok(vec![(vars::MISSION.into(), mp_decide(&ms, &inp, &cfg).encode())])
            })
            .with_output(|view| Ok(mp_outputs(&view.decode(vars::MISSION)?))),
        )
        .build()
        .expect("mp variable sets are disjoint")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assurance::dm_decide;
    use crate::sync::{SimClock, ValueStore};

    fn k() -> EnergyConstants {
        EnergyConstants::default()
    }

    #[test]
    fn eq3_examples() {
        assert!((k().threshold(0.0) - 5.588).abs() < 1e-12);
        assert!(!mp_dm_switch(100.0, 0.0, &k()));
        assert!(mp_dm_switch(k().threshold(0.0), 0.0, &k()));
        assert!(mp_dm_switch(30.0, 25.0, &k()));
    }

    #[test]
    fn mp_instance_switches_at_boundary() {
        let s = mp_instance(4, k(), 100.0);
        let store = ValueStore::new()
            .with(vars::B, k().threshold(0.0))
            .with(vars::FE, 0.0)
            .with(vars::CTLR, Mode::Ac);
        assert_eq!(dm_decide(&s, &store, &SimClock::at(0.05, 4)).unwrap(), Mode::Bc);
        let store = store.with(vars::B, 100.0);
        assert_eq!(dm_decide(&s, &store, &SimClock::at(0.05, 4)).unwrap(), Mode::Ac);
    }

    #[test]
    fn backtrack_bound_examples() {
        assert_eq!(backtrack_energy_bound(0.0, 0.0), 0.0);
        assert_eq!(backtrack_energy_bound(10.0, 0.0), 10.0);
        assert!((backtrack_energy_bound(10.0, 0.1) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn energy_requirement_examples() {
        assert_eq!(es_energy_requirement(Mode::Bc, 3.0, 1.524), 3.0);
        assert!((es_energy_requirement(Mode::Ac, 3.0, 1.524) - 4.524).abs() < 1e-12);
        assert_eq!(es_energy_requirement(Mode::Ac, 0.0, 1.524), 1.524);
    }

    #[test]
    fn default_constants_cover_derived_worst_cases() {
        let plant = PlantParams::default();
        let e_mp = derived_e_mp(&plant, 4, 0.05);
        assert!(e_mp <= 2.032 && e_mp > 2.0);
        let e_180 = derived_e_180(&plant, 2, 0.05);
        assert!(e_180 <= 1.524);
    }

    #[test]
    fn target_sequencing() {
        let ms = MissionState::new(vec![[1.2, 0.0], [0.3, 1.2]], 0);
        let at_t1 = choose_next_target(&ms, [1.2, 0.0], 0.02);
        assert_eq!(at_t1.target, [0.3, 1.2]);
        assert_eq!(choose_next_target(&ms, [0.0, 0.0], 0.02), ms);
        let done = choose_next_target(&at_t1, [0.3, 1.2], 0.02);
        assert!(done.complete);
        assert_eq!(done.target, [0.3, 1.2]);
    }

    #[test]
    fn recharge_targets_last_station() {
        let stations = [[-1.0, 0.0], [0.8, -0.5], [0.4, 0.9]];
        let mut ms = MissionState::new(vec![[1.2, 0.0]], 1);
        ms.ctlr = Mode::Bc;
        let r = recharge_controller(&ms, &stations);
        assert_eq!(r.target, [0.8, -0.5]);
        assert_eq!(recharge_controller(&r, &stations), r);
    }

    #[test]
    fn forward_energy_accumulates_and_resets() {
        let ms = MissionState::new(vec![[1.0, 0.0]], 0);
        let p = 7.3946;
        let after = forward_energy_accumulate(&ms, p * 0.2);
        assert!((after.fe - p * 0.2).abs() < 1e-12);

        let cfg = MpConfig {
            energy: k(),
            stations: vec![[0.0, 0.0]],
            battery_capacity: 100.0,
            arrival_radius: 0.02,
        };
        let mut ms = MissionState::new(vec![[5.0, 0.0]], 0);
        ms.ctlr = Mode::Bc;
        ms.fe = 20.0;
        let log = WaypointLog::empty();
        let inp = MpInputs { tick: 40, p: [0.0, 0.0], battery: 100.0, e_used: 33.0, log: &log };
        let back = mp_decide(&ms, &inp, &cfg);
        assert_eq!(back.ctlr, Mode::Ac);
        assert_eq!(back.fe, 0.0);
        assert_eq!(back.target, [5.0, 0.0]);
    }

    #[test]
    fn mission_state_codec() {
        let mut ms = MissionState::new(vec![[1.0, 2.0], [3.0, 4.0]], 2);
        ms.fe = 1.5;
        ms.ctlr = Mode::Bc;
        assert_eq!(MissionState::decode(&ms.encode()).unwrap(), ms);
    }
}
