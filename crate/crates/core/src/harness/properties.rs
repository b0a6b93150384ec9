use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::system::{interpolated_be, mode_of, real_or_nan};
use crate::assurance::Mode;
use crate::geometry::{dist, Point};
use crate::mission::{es_energy_requirement, EnergyConstants};
use crate::sync::ValueStore;
use crate::vars;

/// Tolerance of the case-by-case inequality chains.
pub const CASE_TOL: f64 = 1e-6;

/// Which top-level properties a run checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PropertySet {
    pub es: bool,
    pub cf: bool,
    pub mc: bool,
}

impl PropertySet {
    pub const ALL: PropertySet = PropertySet { es: true, cf: true, mc: true };
}

impl Default for PropertySet {
    fn default() -> Self {
        PropertySet::ALL
    }
}

impl FromStr for PropertySet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = PropertySet { es: false, cf: false, mc: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "es" => out.es = true,
                "cf" => out.cf = true,
                "mc" => out.mc = true,
                other => return Err(format!("unknown property `{other}` (expected es, cf or mc)")),
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyViolation {
    pub property: String,
    pub tick: u64,
    pub detail: String,
}

impl fmt::Display for PropertyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at tick {}: {}", self.property, self.tick, self.detail)
    }
}

/// Energy-safety bookkeeping for one post-tick store.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyView {
    pub battery: f64,
    pub be: f64,
    pub requirement: f64,
    pub ctlr: Mode,
}

pub fn energy_view(store: &ValueStore, tick: u64, s_nav: u64, dt: f64, e_180: f64) -> EnergyView {
    let ctlr = mode_of(store, vars::CTLR).unwrap_or(Mode::Ac);
    let be = if tick == 0 {
        0.0
    } else {
        interpolated_be(real_or_nan(store, vars::BE), real_or_nan(store, vars::BE_RATE), tick, s_nav, dt)
    };
    EnergyView {
        battery: real_or_nan(store, vars::B),
        be,
        requirement: es_energy_requirement(ctlr, be, e_180),
        ctlr,
    }
}

/// `G(B > E(p, PS))` together with `B > 0`.
pub fn es_holds(e: &EnergyView) -> bool {
    e.battery > 0.0 && e.battery > e.requirement
}

pub fn cf_holds(store: &ValueStore) -> bool {
    real_or_nan(store, vars::D_O) > 0.0
}

/// State sampled at one MP decision: battery and backtrack energy as read
/// by the decision, and the controller it chose for the coming period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecisionSample {
    pub tick: u64,
    pub battery: f64,
    pub be: f64,
    pub fe: f64,
    pub ctlr: Mode,
}

/// One checked pair of consecutive MP decisions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseCheck {
    pub case: u8,
    pub from_tick: u64,
    pub to_tick: u64,
    pub holds: bool,
    pub detail: String,
}

/// The per-case inequality chains over consecutive MP decisions.
pub fn case_check(a: &DecisionSample, b: &DecisionSample, k: &EnergyConstants) -> CaseCheck {
    let tol = CASE_TOL;
    let (case, mut failures) = match (a.ctlr, b.ctlr) {
        (Mode::Bc, Mode::Bc) => (1, Vec::new()),
        (Mode::Ac, Mode::Ac) => (2, Vec::new()),
        (Mode::Ac, Mode::Bc) => (3, Vec::new()),
        (Mode::Bc, Mode::Ac) => (4, Vec::new()),
    };
    let mut need = |ok: bool, what: String| {
        if !ok {
            failures.push(what);
        }
    };
    match case {
        1 => {
            need(b.battery > b.be - tol, format!("B' = {} <= BE' = {}", b.battery, b.be));
            need(b.be <= a.be + tol, format!("BE' = {} > BE = {}", b.be, a.be));
        }
        2 => {
            need(b.battery >= a.battery - k.e_mp - tol, format!("B' = {} < B - E_MP = {}", b.battery, a.battery - k.e_mp));
            need(b.be <= k.be_mp + a.be + tol, format!("BE' = {} > BE_MP + BE = {}", b.be, k.be_mp + a.be));
            need(b.battery > k.e_180 + b.be - tol, format!("B' = {} <= E_180 + BE' = {}", b.battery, k.e_180 + b.be));
        }
        3 => {
            need(b.battery >= a.battery - k.e_mp - tol, format!("B' = {} < B - E_MP = {}", b.battery, a.battery - k.e_mp));
            need(b.battery > k.e_180 + b.be - tol, format!("B' - E_180 = {} <= BE' = {}", b.battery - k.e_180, b.be));
        }
        _ => {
            need(b.battery > k.threshold(b.fe) - tol, format!("B' = {} <= threshold {}", b.battery, k.threshold(b.fe)));
            need(b.battery > k.e_180 + b.be - tol, format!("B' = {} <= E_180 + BE' = {}", b.battery, k.e_180 + b.be));
        }
    }
    CaseCheck {
        case,
        from_tick: a.tick,
        to_tick: b.tick,
        holds: failures.is_empty(),
        detail: failures.join("; "),
    }
}

/// A completed BC leg of the mission-completion Nav.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegRecord {
    pub target: Point,
    pub start_tick: i64,
    pub done_tick: i64,
    pub measured: f64,
    pub bound: f64,
}

impl LegRecord {
    pub fn within_bound(&self) -> bool {
        self.measured <= self.bound + 1e-9
    }
}

/// Physical target visits in mission order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VisitTracker {
    pub targets: Vec<Point>,
    pub radius: f64,
    /// `(target index, time)` of each visit.
    pub visits: Vec<(usize, f64)>,
}

impl VisitTracker {
    pub fn new(targets: Vec<Point>, radius: f64) -> Self {
        VisitTracker { targets, radius, visits: Vec::new() }
    }

    /// Records a visit if `p` reached the next target; returns its index.
    pub fn observe(&mut self, p: Point, time: f64) -> Option<usize> {
        let k = self.visits.len();
        let t = *self.targets.get(k)?;
        (dist(p, t) <= self.radius).then(|| {
            self.visits.push((k, time));
            k
        })
    }

    pub fn all_visited(&self) -> bool {
        self.visits.len() == self.targets.len()
    }

    pub fn finish_time(&self) -> Option<f64> {
        self.all_visited().then(|| self.visits.last().map_or(0.0, |v| v.1))
    }
}
