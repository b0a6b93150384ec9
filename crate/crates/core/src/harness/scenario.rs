use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::completion::McParams;
use crate::geometry::{dist, Point, Polygon};
use crate::mission::{derived_e_180, derived_e_mp, EnergyConstants};
use crate::navigation::NavParams;
use crate::plant::{PlantParams, World};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioMode {
    EsCf,
    Mc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Periods {
    pub mp: u64,
    pub nav: u64,
    pub plant: u64,
}

impl Default for Periods {
    fn default() -> Self {
        Periods { mp: 4, nav: 2, plant: 1 }
    }
}

/// Authoring bounds on the obstacle field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationBounds {
    pub min_internal_angle_deg: f64,
    pub min_edge: f64,
    /// Minimum gap between obstacles.
    pub min_separation: f64,
    /// Minimum clearance of stations, targets and the start from obstacles.
    pub min_clearance: f64,
}

impl Default for ValidationBounds {
    fn default() -> Self {
        ValidationBounds {
            min_internal_angle_deg: 90.0,
            min_edge: 0.1,
            min_separation: 0.2,
            min_clearance: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: ScenarioMode,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub periods: Periods,
    #[serde(default)]
    pub plant: PlantParams,
    #[serde(default)]
    pub energy: EnergyConstants,
    #[serde(default)]
    pub nav: NavParams,
    #[serde(default)]
    pub validation: ValidationBounds,
    #[serde(default)]
    pub obstacles: Vec<Polygon>,
    #[serde(default)]
    pub stations: Vec<Point>,
    pub targets: Vec<Point>,
    /// `[x, y, theta]`.
    pub start: [f64; 3],
    /// Battery at tick 0; defaults to capacity.
    #[serde(default)]
    pub initial_battery: Option<f64>,
    #[serde(default)]
    pub mc: Option<McParams>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
}

fn default_dt() -> f64 {
    0.05
}

fn default_max_ticks() -> u64 {
    20_000
}

/// One violated authoring assumption.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    /// Stable name of the assumption, e.g. `obstacle_internal_angle`.
    pub assumption: &'static str,
    pub detail: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.assumption, self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid scenario `{name}`:\n{}", .issues.iter().map(|i| format!("  - {i}")).collect::<Vec<_>>().join("\n"))]
    Validation { name: String, issues: Vec<Issue> },
}

impl Scenario {
    pub fn from_json(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
        serde_json::from_str(text).map_err(|source| ScenarioError::Parse {
            path: origin.to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn world(&self) -> World {
        World {
            obstacles: self.obstacles.clone(),
            stations: self.stations.clone(),
        }
    }

    pub fn start_point(&self) -> Point {
        [self.start[0], self.start[1]]
    }

    pub fn initial_battery(&self) -> f64 {
        self.initial_battery.unwrap_or(self.plant.battery_capacity)
    }

    pub fn t_nav(&self) -> f64 {
        self.periods.nav as f64 * self.dt
    }

    /// Every violated assumption, in a stable order.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut push = |assumption: &'static str, detail: String| out.push(Issue { assumption, detail });

        if !(self.dt > 0.0 && self.dt.is_finite()) {
            push("tick_length", format!("dt = {} must be positive", self.dt));
        }
        let p = &self.periods;
        if p.mp == 0 || p.nav == 0 || p.plant == 0 {
            push("period_positive", "all periods must be at least 1".into());
        } else {
            if !p.mp.is_multiple_of(p.nav) {
                push("period_nesting", format!("s_Nav = {} does not divide s_MP = {}", p.nav, p.mp));
            }
            if !p.nav.is_multiple_of(p.plant) {
                push("period_nesting", format!("s_Plant = {} does not divide s_Nav = {}", p.plant, p.nav));
            }
        }
        for problem in self.plant.problems() {
            push("plant_parameters", problem);
        }
        if self.max_ticks == 0 {
            push("max_ticks", "max_ticks must be positive".into());
        }

        let b = &self.validation;
        for (k, o) in self.obstacles.iter().enumerate() {
            if o.vertices.len() < 3 || !o.is_simple() {
                push("obstacle_simple", format!("obstacle {k} is not a simple polygon"));
                continue;
            }
            let min_angle = o.interior_angles().into_iter().fold(f64::INFINITY, f64::min);
            if min_angle.to_degrees() < b.min_internal_angle_deg - 1e-9 {
                push(
                    "obstacle_internal_angle",
                    format!(
                        "obstacle {k} has a {:.2} deg corner (< {} deg)",
                        min_angle.to_degrees(),
                        b.min_internal_angle_deg
                    ),
                );
            }
            if o.min_edge() < b.min_edge - 1e-12 {
                push(
                    "obstacle_edge_length",
                    format!("obstacle {k} has a {:.4} m edge (< {} m)", o.min_edge(), b.min_edge),
                );
            }
        }
        for i in 0..self.obstacles.len() {
            for j in i + 1..self.obstacles.len() {
                let (a, c) = (&self.obstacles[i], &self.obstacles[j]);
                if a.vertices.len() < 3 || c.vertices.len() < 3 {
                    continue;
                }
                let d = a.polygon_distance(c);
                if d < b.min_separation - 1e-12 {
                    push(
                        "obstacle_separation",
                        format!("obstacles {i} and {j} are {d:.4} m apart (< {} m)", b.min_separation),
                    );
                }
            }
        }

        let world = self.world();
        let clear = |q: Point| world.obstacle_distance(q) >= b.min_clearance;
        for (k, s) in self.stations.iter().enumerate() {
            if !clear(*s) {
                push("station_clearance", format!("station {k} is within {} m of an obstacle", b.min_clearance));
            }
        }
        if self.targets.is_empty() {
            push("targets_present", "at least one target is required".into());
        }
        for (k, t) in self.targets.iter().enumerate() {
            if !clear(*t) {
                push("target_clearance", format!("target {k} is within {} m of an obstacle", b.min_clearance));
            }
        }
        let start = self.start_point();
        if !clear(start) {
            push("start_clearance", format!("start is within {} m of an obstacle", b.min_clearance));
        }

        match self.mode {
            ScenarioMode::EsCf => {
                if world.visible_station(start, self.plant.ps_detect_range).is_none() {
                    push(
                        "start_at_station",
                        format!("start {start:?} is not within {} m of a visible station", self.plant.ps_detect_range),
                    );
                }
                self.energy_issues(&mut push);
            }
            ScenarioMode::Mc => match &self.mc {
                None => push("mc_parameters", "mode mc needs an `mc` section".into()),
                Some(mc) => {
                    for problem in mc.problems(&self.plant) {
                        push("mc_parameters", problem);
                    }
                    let lo = mc.bounds_min;
                    let hi = mc.bounds_max;
                    let inside = |q: Point| q[0] > lo[0] && q[0] < hi[0] && q[1] > lo[1] && q[1] < hi[1];
                    if !inside(start) || !self.targets.iter().all(|t| inside(*t)) {
                        push("mc_parameters", "start and targets must lie inside the map bounds".into());
                    }
                }
            },
        }
        out
    }

    fn energy_issues(&self, push: &mut impl FnMut(&'static str, String)) {
        let k = &self.energy;
        if [k.e_mp, k.e_180, k.be_mp, k.eps_be].iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            push("energy_constants", "energy constants must be finite and non-negative".into());
        }
        let timing_ok = self.dt > 0.0 && self.dt.is_finite() && self.periods.nav > 0 && self.periods.mp > 0;
        if !k.unchecked && timing_ok && self.plant.problems().is_empty() {
            let e_mp = derived_e_mp(&self.plant, self.periods.mp, self.dt);
            let e_180 = derived_e_180(&self.plant, self.periods.nav, self.dt);
            if k.e_mp < e_mp {
                push("energy_constants", format!("E_MP = {} is below the worst case {e_mp:.4}", k.e_mp));
            }
            if k.be_mp < e_mp {
                push("energy_constants", format!("BE_MP = {} is below the worst case {e_mp:.4}", k.be_mp));
            }
            if k.e_180 < e_180 {
                push("energy_constants", format!("E_180 = {} is below the turn energy {e_180:.4}", k.e_180));
            }
        }
        let b0 = self.initial_battery();
        if !(b0 > k.threshold(0.0) && b0 <= self.plant.battery_capacity) {
            push(
                "initial_battery",
                format!(
                    "initial battery {b0} must exceed the switching threshold {:.3} and not exceed capacity",
                    k.threshold(0.0)
                ),
            );
        }
        if self.plant.battery_capacity <= k.threshold(0.0) {
            push("initial_battery", "capacity must exceed the switching threshold".into());
        }
    }

    pub fn validate(self) -> Result<Scenario, ScenarioError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(self)
        } else {
            Err(ScenarioError::Validation {
                name: self.name.clone(),
                issues,
            })
        }
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: origin.clone(),
        source,
    })?;
    Scenario::from_json(&text, &origin)?.validate()
}

/// Smallest distance between a point and the stations, for diagnostics.
pub fn nearest_station(stations: &[Point], p: Point) -> Option<(usize, f64)> {
    stations
        .iter()
        .enumerate()
        .map(|(k, s)| (k, dist(*s, p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}
