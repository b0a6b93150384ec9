//! Planar geometry: polygons, distances, ray casting and sensing cones.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Point, k: f64) -> Point {
    [a[0] * k, a[1] * k]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn unit(angle: f64) -> Point {
    [angle.cos(), angle.sin()]
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Closest point to `p` on segment `ab`, as the segment parameter in [0, 1].
pub fn closest_param(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return 0.0;
    }
    (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let t = closest_param(p, a, b);
    dist(p, add(a, scale(sub(b, a), t)))
}

/// Distance along the ray `origin + s·dir` (`dir` unit length) to segment
/// `ab`, if the ray hits it.
pub fn ray_segment(origin: Point, dir: Point, a: Point, b: Point) -> Option<f64> {
    let e = sub(b, a);
    let denom = cross(dir, e);
    let w = sub(a, origin);
    if denom.abs() < 1e-15 {
        if cross(w, dir).abs() > 1e-12 {
            return None;
        }
        // Collinear: nearest endpoint in front of the origin.
        let sa = dot(w, dir);
        let sb = dot(sub(b, origin), dir);
        return match (sa >= 0.0, sb >= 0.0) {
            (true, true) => Some(sa.min(sb)),
            (true, false) | (false, true) => Some(0.0),
            (false, false) => None,
        };
    }
    let s = cross(w, e) / denom;
    let u = cross(w, dir) / denom;
    (s >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u)).then_some(s)
}

/// Proper or touching intersection of closed segments `ab` and `cd`.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = cross(sub(b, a), sub(c, a));
    let o2 = cross(sub(b, a), sub(d, a));
    let o3 = cross(sub(d, c), sub(a, c));
    let o4 = cross(sub(d, c), sub(b, c));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point, o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

/// A simple polygon given by its vertices in either winding order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| cross(a, b)).sum::<f64>() / 2.0
    }

    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the polygon; negative inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.boundary_distance(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Interior angles in radians, in vertex order.
    pub fn interior_angles(&self) -> Vec<f64> {
        let n = self.vertices.len();
        let ccw = self.signed_area() > 0.0;
        (0..n)
            .map(|i| {
                let prev = self.vertices[(i + n - 1) % n];
                let cur = self.vertices[i];
                let next = self.vertices[(i + 1) % n];
                let a = sub(prev, cur);
                let b = sub(next, cur);
                // Angle swept from `b` to `a` counter-clockwise is interior for CCW winding.
                let mut ang = cross(b, a).atan2(dot(b, a));
                if !ccw {
                    ang = -ang;
                }
                if ang < 0.0 {
                    ang += 2.0 * PI;
                }
                ang
            })
            .collect()
    }

    pub fn min_edge(&self) -> f64 {
        self.edges().map(|(a, b)| dist(a, b)).fold(f64::INFINITY, f64::min)
    }

    /// True if no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let e: Vec<(Point, Point)> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_intersect(e[i].0, e[i].1, e[j].0, e[j].1) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether segment `pq` touches the polygon (boundary or interior).
    pub fn blocks(&self, p: Point, q: Point) -> bool {
        self.contains(p)
            || self.contains(q)
            || self.edges().any(|(a, b)| segments_intersect(p, q, a, b))
    }

    pub fn polygon_distance(&self, other: &Polygon) -> f64 {
        let mut d = f64::INFINITY;
        for (a, b) in self.edges() {
            for (c, e) in other.edges() {
                if segments_intersect(a, b, c, e) {
                    return 0.0;
                }
                d = d
                    .min(point_segment_distance(a, c, e))
                    .min(point_segment_distance(b, c, e))
                    .min(point_segment_distance(c, a, b))
                    .min(point_segment_distance(e, a, b));
            }
        }
        if self.contains(other.vertices[0]) || other.contains(self.vertices[0]) {
            return 0.0;
        }
        d
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }
}

/// Circular sector with apex `apex`, bisector angle `heading`, half-angle
/// `half` (< π/2) and radius `range`.
#[derive(Clone, Copy, Debug)]
pub struct Cone {
    pub apex: Point,
    pub heading: f64,
    pub half: f64,
    pub range: f64,
}

impl Cone {
    pub fn contains(&self, x: Point) -> bool {
        let w = sub(x, self.apex);
        let r = norm(w);
        if r == 0.0 {
            return true;
        }
        r <= self.range && wrap_angle(w[1].atan2(w[0]) - self.heading).abs() <= self.half
    }

    /// Exact distance from the apex to the nearest point of `poly` inside
    /// the cone, or `None` when the cone sees nothing within range.
    pub fn first_hit(&self, poly: &Polygon) -> Option<f64> {
        if poly.contains(self.apex) {
            return Some(0.0);
        }
        let u_lo = unit(self.heading - self.half);
        let u_hi = unit(self.heading + self.half);
        let mut best = f64::INFINITY;
        for (a, b) in poly.edges() {
            // Clip the edge to the wedge: cross(u_lo, x-apex) >= 0 and cross(x-apex, u_hi) >= 0.
            let wa = sub(a, self.apex);
            let e = sub(b, a);
            let mut t0: f64 = 0.0;
            let mut t1: f64 = 1.0;
            let mut empty = false;
            for (alpha, beta) in [
                (cross(u_lo, wa), cross(u_lo, e)),
                (-cross(u_hi, wa), -cross(u_hi, e)),
            ] {
                if beta.abs() < 1e-300 {
                    if alpha < 0.0 {
                        empty = true;
                    }
                } else if beta > 0.0 {
                    t0 = t0.max(-alpha / beta);
                } else {
                    t1 = t1.min(-alpha / beta);
                }
            }
            if empty || t0 > t1 {
                continue;
            }
            let len2 = dot(e, e);
            let t = if len2 == 0.0 {
                t0
            } else {
                (-dot(wa, e) / len2).clamp(t0, t1)
            };
            best = best.min(norm(add(wa, scale(e, t))));
        }
        (best <= self.range).then_some(best)
    }
}
