use std::sync::Arc;

use super::scenario::{Scenario, ScenarioMode};
use crate::assurance::{check_discharge, Contract, DischargeGraph, DischargeReport, Mode, Predicate};
use crate::completion::{
    mc_mp_component, mc_mp_outputs, mc_nav_component, McConfig, McNavState, McPlanner, McState,
};
use crate::mission::{es_energy_requirement, mp_component, mp_dm_switch, mp_outputs, MissionState, MpConfig};
use crate::navigation::{nav_component, nav_outputs, NavDecision, WaypointLog};
use crate::plant::{plant_component_with, sense, sensor_assignments, PlantParams, RoverState};
use crate::sync::{compose_all, Codec, Component, CompositionError, StepError, Value, ValueStore, View};
use crate::vars;

/// Slack on floating-point comparisons between energies recomputed along
/// different paths.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum AssembleError {
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error("contract discharge failed:\n{0}")]
    Discharge(DischargeReport),
}

/// A contract and the period its assumption is sampled at.
#[derive(Clone, Debug)]
pub struct PeriodicContract {
    pub contract: Contract,
    pub period: u64,
}

/// The assembled rover: `MP ∥ Nav ∥ Plant` with contracts and initial values.
pub struct System {
    pub mode: ScenarioMode,
    pub composition: Component,
    pub contracts: Vec<PeriodicContract>,
    pub discharge: DischargeReport,
    pub initial: ValueStore,
    /// Mission-completion planner, shared with the MP and Nav components.
    pub planner: Option<Arc<McPlanner>>,
}

/// Backtrack energy at the end of tick `tick`, extrapolated from the value
/// Nav published at its last decision.
pub fn interpolated_be(be: f64, be_rate: f64, tick: u64, s_nav: u64, dt: f64) -> f64 {
    be + be_rate * ((tick % s_nav) + 1) as f64 * dt
}

/// `E(p, PS)` on a store at the end of tick `tick`.
pub fn energy_requirement_at(view: &View<'_>, s_nav: u64, e_180: f64) -> Result<f64, StepError> {
    let ctlr: Mode = view.decode(vars::CTLR)?;
    if view.tick() == 0 {
        return Ok(es_energy_requirement(ctlr, 0.0, e_180));
    }
    let be = interpolated_be(view.real(vars::BE)?, view.real(vars::BE_RATE)?, view.tick(), s_nav, view.dt());
    Ok(es_energy_requirement(ctlr, be, e_180))
}

fn plant_tracks(plant: Arc<PlantParams>) -> Predicate {
    Predicate::atom("v = clamp(v_T) and omega = clamp(omega_T)", move |v| {
        let (vt, wt) = plant.clamp_command(v.real(vars::V_T)?, v.real(vars::OMEGA_T)?);
        Ok(v.real(vars::V)? == vt && v.real(vars::OMEGA)? == wt)
    })
}

fn collision_free() -> Predicate {
    Predicate::atom("d_o > 0", |v| Ok(v.real(vars::D_O)? > 0.0))
}

fn plant_contract(s: &Scenario) -> PeriodicContract {
    let plant = Arc::new(s.plant.clone());
    PeriodicContract {
        contract: Contract::new(
            "Plant",
            [vars::V_T, vars::OMEGA_T, vars::DOCK],
            [vars::P, vars::THETA, vars::V, vars::OMEGA, vars::B, vars::IR, vars::PS_VISIBLE, vars::D_O],
        )
        .guarantee("A_P", plant_tracks(plant)),
        period: s.periods.plant,
    }
}

/// Contracts of the energy-safety system.
pub fn es_contracts(s: &Scenario) -> Vec<PeriodicContract> {
    let eps = s.energy.eps_be;
    let e_180 = s.energy.e_180;
    let s_nav = s.periods.nav;
    let be_bounded = move || {
        Predicate::implies(
            Predicate::atom("ctlr = BC", |v| Ok(v.decode::<Mode>(vars::CTLR)?.is_bc())),
            Predicate::atom("be <= (1 + eps_BE) FE", move |v| {
                let bound = (1.0 + eps) * v.real(vars::FE)?;
                Ok(v.real(vars::BE)? <= bound * (1.0 + ENERGY_TOL) + ENERGY_TOL)
            }),
        )
    };
    let es = Predicate::atom("B > E(p, PS)", move |v| {
        let b = v.real(vars::B)?;
        Ok(b > 0.0 && b > energy_requirement_at(v, s_nav, e_180)?)
    });
    let plant = Arc::new(s.plant.clone());
    vec![
        PeriodicContract {
            contract: Contract::new(
                "MP",
                [vars::P, vars::B, vars::E_USED, vars::W, vars::BE, vars::BE_RATE],
                [vars::T, vars::CTLR, vars::FE],
            )
            .assume("A_BE", be_bounded())
            .guarantee("ES", es),
            period: s.periods.mp,
        },
        PeriodicContract {
            contract: Contract::new(
                "Nav",
                [
                    vars::T,
                    vars::CTLR,
                    vars::FE,
                    vars::P,
                    vars::THETA,
                    vars::IR,
                    vars::PS_VISIBLE,
                    vars::E_USED,
                    vars::V,
                    vars::OMEGA,
                    vars::D_O,
                ],
                [vars::V_T, vars::OMEGA_T, vars::DOCK, vars::W, vars::BE, vars::BE_RATE],
            )
            .assume("A_P", plant_tracks(plant))
            .guarantee("A_BE", be_bounded())
            .guarantee("CF", collision_free()),
            period: s.periods.nav,
        },
        plant_contract(s),
    ]
}

/// Contracts of the mission-completion system. The traversal-time bound
/// `A_TU` is checked per executed leg by the harness, not per tick.
pub fn mc_contracts(s: &Scenario) -> Vec<PeriodicContract> {
    let deadline = s.mc.as_ref().map_or(0.0, |m| m.deadline);
    let plant = Arc::new(s.plant.clone());
    vec![
        PeriodicContract {
            contract: Contract::new("MP", [vars::P], [vars::T, vars::CTLR, vars::DONE])
                .assume("A_TU", Predicate::True)
                .guarantee(
                    "MC",
                    Predicate::atom("done or t < T", move |v| {
                        Ok(v.bool(vars::DONE)? || (v.tick() as f64) * v.dt() < deadline)
                    }),
                ),
            period: s.periods.mp,
        },
        PeriodicContract {
            contract: Contract::new(
                "Nav",
                [vars::T, vars::CTLR, vars::P, vars::IR, vars::V, vars::OMEGA, vars::D_O],
                [vars::V_T, vars::OMEGA_T],
            )
            .assume("A_P", plant_tracks(plant))
            .guarantee_token("A_TU")
            .guarantee("CF", collision_free()),
            period: s.periods.nav,
        },
        plant_contract(s),
    ]
}

pub fn contracts(s: &Scenario) -> Vec<PeriodicContract> {
    match s.mode {
        ScenarioMode::EsCf => es_contracts(s),
        ScenarioMode::Mc => mc_contracts(s),
    }
}

/// Static discharge check over `contracts`.
pub fn discharge(contracts: &[PeriodicContract]) -> DischargeReport {
    let graph = DischargeGraph::new(contracts.iter().map(|c| &c.contract));
    check_discharge(&graph)
}

pub fn assemble(s: &Scenario) -> Result<System, AssembleError> {
    assemble_with(s, |_| {})
}

/// Assembles the system after `edit` has had a chance to change the
/// contracts, e.g. to drop a guarantee.
pub fn assemble_with(s: &Scenario, edit: impl FnOnce(&mut Vec<PeriodicContract>)) -> Result<System, AssembleError> {
    let mut cs = contracts(s);
    edit(&mut cs);
    let report = discharge(&cs);
    if !report.passed() {
        return Err(AssembleError::Discharge(report));
    }
    let plant = Arc::new(s.plant.clone());
    let world = Arc::new(s.world());
    let p = &s.periods;
    let metered = s.mode == ScenarioMode::EsCf;
    let plant_c = plant_component_with(plant.clone(), world.clone(), p.plant, metered);
    let start = RoverState::at(s.start_point(), s.start[2], s.initial_battery());
    let reading = sense(&start, &world, &plant);

    let mut initial = ValueStore::new()
        .with(vars::P, start.p)
        .with(vars::THETA, start.theta)
        .with(vars::V, 0.0)
        .with(vars::OMEGA, 0.0)
        .with(vars::B, start.battery)
        .with(vars::E_USED, 0.0)
        .with(vars::V_T, 0.0)
        .with(vars::OMEGA_T, 0.0)
        .with(vars::DOCK, false)
        .with(vars::CF_MODE, Mode::Ac);
    for (var, value) in sensor_assignments(&reading) {
        initial.set(var.as_str(), value);
    }

    let (composition, planner) = match s.mode {
        ScenarioMode::EsCf => {
            let cfg = Arc::new(MpConfig {
                energy: s.energy.clone(),
                stations: s.stations.clone(),
                battery_capacity: s.plant.battery_capacity,
                arrival_radius: s.nav.arrival_radius + 1e-9,
            });
            let start_ps = reading.detected_ps.map_or(-1, |k| k as i64);
            let mut ms = MissionState::new(s.targets.clone(), start_ps);
            if mp_dm_switch(start.battery, 0.0, &s.energy) {
                ms.ctlr = Mode::Bc;
            }
            let nav = NavDecision { nav_mode: ms.ctlr, ..NavDecision::initial() };
            initial.set(vars::MISSION, ms.encode());
            for (var, value) in mp_outputs(&ms).into_iter().chain(nav_outputs(&nav)) {
                initial.set(var.as_str(), value);
            }
            initial.set(vars::W, WaypointLog::empty().encode());
            initial.set(vars::NAV_MODE, ms.ctlr.encode());
            initial.set(vars::NAV_STATE, nav.encode());
            let mp = mp_component(cfg, p.mp);
            let nav_c = nav_component(plant.clone(), s.nav.clone(), p.nav);
            (compose_all(&[&mp, &nav_c, &plant_c])?, None)
        }
        ScenarioMode::Mc => {
            let mc = s.mc.clone().unwrap_or_default();
            let t_nav = s.t_nav();
            let planner = Arc::new(McPlanner::new(
                mc.grid(&s.obstacles),
                mc.speeds(t_nav),
                s.targets.clone(),
                p.mp as f64 * s.dt,
            ));
            if mc.precompute {
                planner.precompute();
            }
            let cfg = Arc::new(McConfig {
                planner: planner.clone(),
                ac: mc.ac,
                detour_radius: mc.detour_radius,
                seed: s.seed,
                arrival_radius: s.nav.arrival_radius + 1e-9,
                v_max: s.plant.v_max,
                s_mp: p.mp,
                dt: s.dt,
                start: start.p,
                bounds: (mc.bounds_min, mc.bounds_max),
            });
            let ms = McState::initial(&cfg, mc.deadline);
            let nav = McNavState { nav_mode: ms.ctlr, ..McNavState::initial() };
            initial.set(vars::MISSION, ms.encode());
            for (var, value) in mc_mp_outputs(&ms) {
                initial.set(var.as_str(), value);
            }
            initial.set(vars::NAV_MODE, ms.ctlr.encode());
            initial.set(vars::NAV_STATE, nav.encode());
            let mp = mc_mp_component(cfg, p.mp);
            let nav_c = mc_nav_component(planner.clone(), plant.clone(), s.nav.clone(), p.nav);
            (compose_all(&[&mp, &nav_c, &plant_c])?, Some(planner))
        }
    };
    Ok(System {
        mode: s.mode,
        composition,
        contracts: cs,
        discharge: report,
        initial,
        planner,
    })
}

/// Reads a real, treating a missing variable as NaN; for reporting only.
pub(crate) fn real_or_nan(store: &ValueStore, var: &str) -> f64 {
    store.real(var).unwrap_or(f64::NAN)
}

pub(crate) fn mode_of(store: &ValueStore, var: &str) -> Option<Mode> {
    store.get(var).and_then(|v| Mode::decode(v).ok())
}

pub(crate) fn value_int(store: &ValueStore, var: &str) -> i64 {
    store.get(var).and_then(Value::as_int).unwrap_or(-1)
}
