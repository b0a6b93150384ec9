//! Mission completion: occupancy grid, A*, motion primitives, the traversal
//! time bound and the bounded-liveness switching condition.

mod components;
mod grid;
mod plan;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::plant::PlantParams;

pub use components::{
    detour_point, mc_mp_component, mc_mp_outputs, mc_nav_component, mc_nav_step, mp_mc_decide, LegPlan, McConfig,
    McNavInputs, McNavState,
    McState,
};
pub use grid::{astar_cells, astar_path, octile, Cell, CellPath, GridMap, PlanError};
pub use plan::{
    mc_dm_switch, mission_time_bound, plan_leg, reachable_region, time_upper_bound, BcSpeeds, McDecision,
    McPlanner, Primitive, PrimitivePlan,
};

/// Advanced controller used by the mission-completion planner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McAc {
    /// Head straight for each target.
    Straight,
    /// Visit a random detour point before each target.
    Detour,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McParams {
    /// Mission deadline `T` in seconds.
    pub deadline: f64,
    pub cell_size: f64,
    /// Obstacle inflation of the planning grid.
    pub inflation: f64,
    pub bounds_min: Point,
    pub bounds_max: Point,
    pub v_bc: f64,
    pub omega_bc: f64,
    /// Overhead per primitive junction; defaults to one Nav period.
    pub epsilon_t: Option<f64>,
    pub ac: McAc,
    /// Largest offset of a detour point from the straight route.
    pub detour_radius: f64,
    /// Cache per-cell bounds for every target suffix up front.
    pub precompute: bool,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            deadline: 60.0,
            cell_size: 0.05,
            inflation: 0.1,
            bounds_min: [-1.5, -1.5],
            bounds_max: [1.5, 1.5],
            v_bc: 0.4,
            omega_bc: PI,
            epsilon_t: None,
            ac: McAc::Straight,
            detour_radius: 0.4,
            precompute: false,
        }
    }
}

impl McParams {
    pub fn problems(&self, plant: &PlantParams) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.deadline > 0.0) {
            out.push("deadline must be positive".into());
        }
        if !(self.cell_size > 0.0) {
            out.push("cell_size must be positive".into());
        }
        if !(self.inflation >= self.cell_size * std::f64::consts::SQRT_2 / 2.0) {
            out.push("inflation must cover half a cell diagonal".into());
        }
        if !(self.bounds_max[0] > self.bounds_min[0] && self.bounds_max[1] > self.bounds_min[1]) {
            out.push("bounds_max must exceed bounds_min".into());
        }
        if !(self.v_bc > 0.0 && self.v_bc <= plant.v_max / 2.0) {
            out.push(format!("v_bc must lie in (0, v_max/2 = {}]", plant.v_max / 2.0));
        }
        if !(self.omega_bc > 0.0 && self.omega_bc <= plant.omega_max / 2.0) {
            out.push(format!("omega_bc must lie in (0, omega_max/2 = {}]", plant.omega_max / 2.0));
        }
        if self.epsilon_t.is_some_and(|e| e < 0.0) {
            out.push("epsilon_t must be non-negative".into());
        }
        out
    }
}

impl McParams {
    pub fn speeds(&self, t_nav: f64) -> BcSpeeds {
        BcSpeeds {
            v_bc: self.v_bc,
            omega_bc: self.omega_bc,
            t_nav,
            eps_t: self.epsilon_t.unwrap_or(t_nav),
        }
    }

    pub fn grid(&self, obstacles: &[crate::geometry::Polygon]) -> GridMap {
        GridMap::rasterize(obstacles, self.bounds_min, self.bounds_max, self.cell_size, self.inflation)
    }
}
