use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use serde::Serialize;

use super::grid::{astar_path, Cell, GridMap, PlanError};
use crate::geometry::{dist, sub, wrap_angle, Point};
use crate::navigation::NavCommand;

/// Speeds of the certified primitives and the Nav period they run at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BcSpeeds {
    pub v_bc: f64,
    pub omega_bc: f64,
    pub t_nav: f64,
    /// Overhead charged per turn.
    pub eps_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Primitive {
    /// Signed in-place rotation in radians.
    Turn(f64),
    /// Straight run in metres.
    Straight(f64),
}

impl Primitive {
    /// Time at the nominal BC speed.
    pub fn nominal(&self, s: &BcSpeeds) -> f64 {
        match *self {
            Primitive::Turn(a) => a.abs() / s.omega_bc,
            Primitive::Straight(l) => l / s.v_bc,
        }
    }

    /// Whole Nav periods the executor spends on the primitive. Rounding down
    /// speeds the primitive up by less than a factor of two.
    pub fn periods(&self, s: &BcSpeeds) -> u64 {
        ((self.nominal(s) / s.t_nav).floor() as u64).max(1)
    }

    /// Constant command that completes the primitive in [`Self::periods`].
    pub fn command(&self, s: &BcSpeeds) -> NavCommand {
        let t = self.periods(s) as f64 * s.t_nav;
        match *self {
            Primitive::Turn(a) => NavCommand { v: 0.0, omega: a / t },
            Primitive::Straight(l) => NavCommand { v: l / t, omega: 0.0 },
        }
    }

    /// Bound on the executed time of the primitive.
    pub fn bound(&self, s: &BcSpeeds) -> f64 {
        let turn = if matches!(self, Primitive::Turn(_)) { s.eps_t } else { 0.0 };
        self.nominal(s).max(s.t_nav) + turn
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimitivePlan {
    pub segments: Vec<Primitive>,
    /// Polyline the plan follows, starting at the plan origin.
    pub points: Vec<Point>,
    /// Time at nominal speeds.
    pub duration: f64,
    /// `tu`: the duration with Nav-period rounding and turn overheads.
    pub bound: f64,
}

impl PrimitivePlan {
    fn from_points(points: Vec<Point>, heading: Option<f64>, s: &BcSpeeds) -> Self {
        let mut segments = Vec::new();
        let mut h = heading;
        for w in points.windows(2) {
            let d = sub(w[1], w[0]);
            let len = d[0].hypot(d[1]);
            if len < 1e-12 {
                continue;
            }
            let want = d[1].atan2(d[0]);
            let turn = match h {
                Some(h) => wrap_angle(want - h),
                None => PI,
            };
            if turn.abs() > 1e-12 {
                segments.push(Primitive::Turn(turn));
            }
            segments.push(Primitive::Straight(len));
            h = Some(want);
        }
        let duration = segments.iter().map(|p| p.nominal(s)).sum();
        let bound = segments.iter().map(|p| p.bound(s)).sum();
        PrimitivePlan { segments, points, duration, bound }
    }

    /// Executor steps: `(command, periods)` per primitive.
    pub fn steps(&self, s: &BcSpeeds) -> Vec<(NavCommand, u64)> {
        self.segments.iter().map(|p| (p.command(s), p.periods(s))).collect()
    }

    /// Executed time of the plan in seconds.
    pub fn executed_time(&self, s: &BcSpeeds) -> f64 {
        self.segments.iter().map(|p| p.periods(s) as f64 * s.t_nav).sum()
    }
}

/// Whether the straight segment `a → b` stays in free cells, ignoring the
/// two end cells.
fn visible(map: &GridMap, a: Point, b: Point, ends: (Cell, Cell)) -> bool {
    let n = (dist(a, b) / (map.cell_size / 4.0)).ceil().max(1.0) as usize;
    (0..=n).all(|k| {
        let t = k as f64 / n as f64;
        let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        match map.cell_of(q) {
            Some(c) => c == ends.0 || c == ends.1 || map.is_free(c),
            None => false,
        }
    })
}

/// Shortcut the polyline through cell centres wherever the grid allows.
fn string_pull(map: &GridMap, pts: &[Point], ends: (Cell, Cell)) -> Vec<Point> {
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = pts.len() - 1;
        while j > i + 1 && !visible(map, pts[i], pts[j], ends) {
            j -= 1;
        }
        out.push(pts[j]);
        i = j;
    }
    out
}

/// BC plan from `a` to `b`: to the centre of `a`'s cell, then along the
/// smoothed A* path. Without a heading the first turn is charged as π.
pub fn plan_leg(map: &GridMap, a: Point, heading: Option<f64>, b: Point, s: &BcSpeeds) -> Result<PrimitivePlan, PlanError> {
    let path = astar_path(map, a, b)?;
    let first = path.cells[0];
    let last = *path.cells.last().expect("non-empty path");
    let mut through: Vec<Point> = path.cells.iter().map(|c| map.center(*c)).collect();
    if dist(*through.last().expect("non-empty"), b) > 1e-12 {
        through.push(b);
    }
    let mut points = vec![a];
    points.extend(string_pull(map, &through, (first, last)));
    Ok(PrimitivePlan::from_points(points, heading, s))
}

/// `tu(a, b)`.
pub fn time_upper_bound(map: &GridMap, a: Point, heading: Option<f64>, b: Point, s: &BcSpeeds) -> Result<f64, PlanError> {
    plan_leg(map, a, heading, b, s).map(|p| p.bound)
}

/// Bound on finishing `targets` in order from `p`, with `latency` charged
/// before each leg after the first for the planner to hand out the next target.
pub fn mission_time_bound(
    map: &GridMap,
    p: Point,
    heading: Option<f64>,
    targets: &[Point],
    s: &BcSpeeds,
    latency: f64,
) -> Result<f64, PlanError> {
    let Some(first) = targets.first() else {
        return Ok(0.0);
    };
    let mut total = time_upper_bound(map, p, heading, *first, s)?;
    for w in targets.windows(2) {
        total += latency + time_upper_bound(map, w[0], None, w[1], s)?;
    }
    Ok(total)
}

/// Cells meeting the closed disk of radius `radius` around `p`.
pub fn reachable_region(map: &GridMap, p: Point, radius: f64) -> Vec<Cell> {
    let span = (radius / map.cell_size).ceil() as i64 + 1;
    let Some(c) = map.cell_of(p) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for dy in -span..=span {
        for dx in -span..=span {
            let (x, y) = (c.0 as i64 + dx, c.1 as i64 + dy);
            if x < 0 || y < 0 || x >= map.nx as i64 || y >= map.ny as i64 {
                continue;
            }
            let cell = (x as usize, y as usize);
            if map.distance_to_cell(p, cell) <= radius {
                out.push(cell);
            }
        }
    }
    out
}

/// Outcome of one MC decision.
#[derive(Clone, Debug, PartialEq)]
pub struct McDecision {
    pub switch: bool,
    /// Largest completion bound over the reachable region.
    pub worst: f64,
    pub error: Option<PlanError>,
}

/// Per-cell completion bounds for a fixed target sequence, memoised.
#[derive(Debug)]
pub struct McPlanner {
    pub map: GridMap,
    pub speeds: BcSpeeds,
    pub targets: Vec<Point>,
    /// Handoff latency between legs.
    pub latency: f64,
    /// `suffix[i]`: bound from arriving at target `i` to the end.
    suffix: Vec<Result<f64, PlanError>>,
    cache: Mutex<HashMap<(usize, usize), Result<f64, PlanError>>>,
}

impl McPlanner {
    pub fn new(map: GridMap, speeds: BcSpeeds, targets: Vec<Point>, latency: f64) -> Self {
        let n = targets.len();
        let mut suffix = vec![Ok(0.0); n];
        for i in (0..n.saturating_sub(1)).rev() {
            let leg = time_upper_bound(&map, targets[i], None, targets[i + 1], &speeds);
            suffix[i] = suffix[i + 1].clone().and_then(|rest| leg.map(|leg| rest + latency + leg));
        }
        McPlanner {
            map,
            speeds,
            targets,
            latency,
            suffix,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Fills the cache for every cell and target suffix.
    pub fn precompute(&self) {
        for i in 0..self.targets.len() {
            for row in 0..self.map.ny {
                for col in 0..self.map.nx {
                    let _ = self.cell_bound((col, row), i);
                }
            }
        }
    }

    pub fn cached_cells(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Worst-case overhead of reaching the cell centre from anywhere in it.
    pub fn entry_overhead(&self) -> f64 {
        let s = &self.speeds;
        (PI / s.omega_bc).max(s.t_nav) + s.eps_t + (self.map.half_diagonal() / s.v_bc).max(s.t_nav)
    }

    /// Bound on completing targets `i..` from any point of `cell`.
    pub fn cell_bound(&self, cell: Cell, i: usize) -> Result<f64, PlanError> {
        if i >= self.targets.len() {
            return Ok(0.0);
        }
        let key = (self.map.index(cell), i);
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return v.clone();
        }
        let center = self.map.center(cell);
        let value = time_upper_bound(&self.map, center, None, self.targets[i], &self.speeds)
            .and_then(|leg| self.suffix[i].clone().map(|rest| self.entry_overhead() + leg + rest));
        self.cache.lock().expect("cache lock").insert(key, value.clone());
        value
    }

    /// Bound on completing targets `i..` from the exact point `p` and heading.
    pub fn bound_from(&self, p: Point, heading: Option<f64>, i: usize) -> Result<f64, PlanError> {
        if i >= self.targets.len() {
            return Ok(0.0);
        }
        let leg = time_upper_bound(&self.map, p, heading, self.targets[i], &self.speeds)?;
        Ok(leg + self.suffix[i].clone()?)
    }

    /// Largest completion bound over the cells reachable within `radius`. If
    /// target `next` may be reached on the way, the shorter sequence counts too.
    pub fn worst_bound(&self, p: Point, next: usize, radius: f64, arrival: f64) -> Result<f64, PlanError> {
        let mut suffixes = vec![next];
        if next + 1 < self.targets.len() && dist(p, self.targets[next]) <= radius + arrival {
            suffixes.push(next + 1);
        }
        let m = &self.map;
        let hi = [m.origin[0] + m.nx as f64 * m.cell_size, m.origin[1] + m.ny as f64 * m.cell_size];
        if (0..2).any(|k| p[k] - radius < m.origin[k] || p[k] + radius >= hi[k]) {
            return Err(PlanError::OutOfBounds(p));
        }
        let mut worst: f64 = 0.0;
        let region = reachable_region(&self.map, p, radius);
        if region.is_empty() {
            return Err(PlanError::OutOfBounds(p));
        }
        for cell in region {
            for &i in &suffixes {
                worst = worst.max(self.cell_bound(cell, i)?);
            }
        }
        Ok(worst)
    }
}

/// Switch to BC unless every point reachable before the next decision can
/// still finish in time: `max t(p′, Tseq) < remaining − s_MP·dt`.
pub fn mc_dm_switch(
    planner: &McPlanner,
    p: Point,
    next: usize,
    remaining_time: f64,
    s_mp: u64,
    dt: f64,
    v_max: f64,
    arrival: f64,
) -> McDecision {
    if next >= planner.targets.len() {
        return McDecision { switch: false, worst: 0.0, error: None };
    }
    let horizon = s_mp as f64 * dt;
    match planner.worst_bound(p, next, v_max * horizon, arrival) {
        Ok(worst) => McDecision {
            switch: !(worst < remaining_time - horizon),
            worst,
            error: None,
        },
        Err(e) => McDecision { switch: true, worst: f64::INFINITY, error: Some(e) },
    }
}
