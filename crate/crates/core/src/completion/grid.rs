use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::geometry::{Point, Polygon};

/// Index of a grid cell as `(column, row)`.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PlanError {
    #[error("no path from {from:?} to {to:?}")]
    Unreachable { from: Point, to: Point },
    #[error("{0:?} lies outside the map")]
    OutOfBounds(Point),
}

/// Occupancy grid over a world rectangle. A cell is occupied when its
/// centre lies within `inflation` of an obstacle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridMap {
    pub cell_size: f64,
    pub origin: Point,
    pub nx: usize,
    pub ny: usize,
    pub inflation: f64,
    occupied: Vec<bool>,
}

impl GridMap {
    pub fn empty(origin: Point, nx: usize, ny: usize, cell_size: f64) -> Self {
        GridMap {
            cell_size,
            origin,
            nx,
            ny,
            inflation: 0.0,
            occupied: vec![false; nx * ny],
        }
    }

    pub fn rasterize(obstacles: &[Polygon], lo: Point, hi: Point, cell_size: f64, inflation: f64) -> Self {
        let nx = ((hi[0] - lo[0]) / cell_size).ceil().max(1.0) as usize;
        let ny = ((hi[1] - lo[1]) / cell_size).ceil().max(1.0) as usize;
        let mut map = GridMap::empty(lo, nx, ny, cell_size);
        map.inflation = inflation;
        for row in 0..ny {
            for col in 0..nx {
                let c = map.center((col, row));
                let d = obstacles
                    .iter()
                    .map(|o| o.signed_distance(c))
                    .fold(f64::INFINITY, f64::min);
                map.occupied[row * nx + col] = d <= inflation;
            }
        }
        map
    }

    pub fn set_occupied(&mut self, cell: Cell, on: bool) {
        self.occupied[cell.1 * self.nx + cell.0] = on;
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.occupied[cell.1 * self.nx + cell.0]
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.1 * self.nx + cell.0
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        let fx = (p[0] - self.origin[0]) / self.cell_size;
        let fy = (p[1] - self.origin[1]) / self.cell_size;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (col, row) = (fx.floor() as usize, fy.floor() as usize);
        (col < self.nx && row < self.ny).then_some((col, row))
    }

    pub fn center(&self, cell: Cell) -> Point {
        [
            self.origin[0] + (cell.0 as f64 + 0.5) * self.cell_size,
            self.origin[1] + (cell.1 as f64 + 0.5) * self.cell_size,
        ]
    }

    /// Distance from `p` to the closest point of `cell`.
    pub fn distance_to_cell(&self, p: Point, cell: Cell) -> f64 {
        let lo = [
            self.origin[0] + cell.0 as f64 * self.cell_size,
            self.origin[1] + cell.1 as f64 * self.cell_size,
        ];
        let dx = (lo[0] - p[0]).max(0.0).max(p[0] - lo[0] - self.cell_size);
        let dy = (lo[1] - p[1]).max(0.0).max(p[1] - lo[1] - self.cell_size);
        dx.hypot(dy)
    }

    pub fn half_diagonal(&self) -> f64 {
        self.cell_size * std::f64::consts::SQRT_2 / 2.0
    }

    /// The 8-neighbourhood of `cell`, with the step cost in cell units.
    /// Diagonal steps must not clip an occupied corner.
    pub fn neighbours(&self, cell: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        STEPS.iter().filter_map(move |&(dx, dy)| {
            let (x, y) = (cell.0 as i64 + dx, cell.1 as i64 + dy);
            if x < 0 || y < 0 || x >= self.nx as i64 || y >= self.ny as i64 {
                return None;
            }
            let next = (x as usize, y as usize);
            if dx != 0 && dy != 0 {
                let side_a = (x as usize, cell.1);
                let side_b = (cell.0, y as usize);
                if !self.is_free(side_a) || !self.is_free(side_b) {
                    return None;
                }
                Some((next, std::f64::consts::SQRT_2))
            } else {
                Some((next, 1.0))
            }
        })
    }
}

/// Octile distance between two cells, in cell units.
pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    h: f64,
    index: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A cell path and its octile cost in metres.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPath {
    pub cells: Vec<Cell>,
    pub cost: f64,
}

/// Whether a move from `from` into `to` is allowed. A rover that starts in
/// an inflated cell may leave it; entering one is only allowed at the goal.
fn passable(map: &GridMap, from: Cell, to: Cell, goal: Cell) -> bool {
    to == goal || map.is_free(to) || !map.is_free(from)
}

/// Minimal-cost 8-connected path from `a` to `b` under the octile metric.
pub fn astar_path(map: &GridMap, a: Point, b: Point) -> Result<CellPath, PlanError> {
    let start = map.cell_of(a).ok_or(PlanError::OutOfBounds(a))?;
    let goal = map.cell_of(b).ok_or(PlanError::OutOfBounds(b))?;
    let cells = astar_cells(map, start, goal).ok_or(PlanError::Unreachable { from: a, to: b })?;
    let cost = cells
        .windows(2)
        .map(|w| octile(w[0], w[1]))
        .sum::<f64>()
        * map.cell_size;
    Ok(CellPath { cells, cost })
}

pub fn astar_cells(map: &GridMap, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    let n = map.cell_count();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let s = map.index(start);
    g[s] = 0.0;
    open.push(Open { f: octile(start, goal), h: octile(start, goal), index: s });
    let cell_at = |i: usize| (i % map.nx, i / map.nx);
    while let Some(Open { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        let cell = cell_at(index);
        if cell == goal {
            let mut path = vec![cell];
            let mut i = index;
            while parent[i] != usize::MAX {
                i = parent[i];
                path.push(cell_at(i));
            }
            path.reverse();
            return Some(path);
        }
        for (next, step) in map.neighbours(cell) {
            if !passable(map, cell, next, goal) {
                continue;
            }
            let j = map.index(next);
            let cand = g[index] + step;
            if cand < g[j] {
                g[j] = cand;
                parent[j] = index;
                let h = octile(next, goal);
                open.push(Open { f: cand + h, h, index: j });
            }
        }
    }
    None
}
