//! Inner loop and plant: unicycle kinematics, wheel speeds, power, battery,
//! IR sensing and power-station detection.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Cone, Point, Polygon};
use crate::sync::{Component, RateEntry, StepError, Value};
use crate::vars;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub wheel_radius: f64,
    pub wheelbase: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub sensor_count: usize,
    /// Full opening angle of each IR cone.
    pub sensor_fov: f64,
    pub sensor_range: f64,
    pub ps_detect_range: f64,
    pub battery_capacity: f64,
    /// Energy per radian of wheel rotation.
    pub power_p1: f64,
    /// Idle power draw.
    pub power_p2: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            wheel_radius: 0.0325,
            wheelbase: 0.09925,
            v_max: 0.8,
            omega_max: 7.0 * PI,
            sensor_count: 8,
            sensor_fov: 5f64.to_radians(),
            sensor_range: 0.8,
            ps_detect_range: 0.1,
            battery_capacity: 100.0,
            power_p1: 0.15,
            power_p2: 0.01,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum PlantError {
    #[error("command out of bounds: v = {v}, omega = {omega}")]
    Bounds { v: f64, omega: f64 },
    #[error("battery depleted: {battery} left before a step needing {needed}")]
    BatteryDepleted { battery: f64, needed: f64 },
}

impl PlantParams {
    /// Names of parameters violating positivity or the blind-spot condition.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("wheel_radius", self.wheel_radius),
            ("wheelbase", self.wheelbase),
            ("v_max", self.v_max),
            ("omega_max", self.omega_max),
            ("sensor_fov", self.sensor_fov),
            ("sensor_range", self.sensor_range),
            ("ps_detect_range", self.ps_detect_range),
            ("battery_capacity", self.battery_capacity),
            ("power_p1", self.power_p1),
            ("power_p2", self.power_p2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                out.push(format!("{name} must be positive and finite"));
            }
        }
        if self.sensor_count == 0 {
            out.push("sensor_count must be positive".into());
        }
        if self.sensor_fov * self.sensor_count as f64 >= 2.0 * PI {
            out.push("sensor cones must leave blind spots (sensor_fov * sensor_count < 2 pi)".into());
        }
        if self.sensor_fov >= PI {
            out.push("sensor_fov must be below pi".into());
        }
        out
    }

    /// Body-frame bisector of sensor `k`.
    pub fn sensor_heading(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.sensor_count as f64
    }

    /// Largest `|omega_l| + |omega_r|` over admissible `(v, omega)`.
    pub fn max_wheel_sum(&self) -> f64 {
        (2.0 * self.v_max).max(self.omega_max * self.wheelbase) / self.wheel_radius
    }

    pub fn max_power(&self) -> f64 {
        self.power_p1 * self.max_wheel_sum() + self.power_p2
    }

    pub fn clamp_command(&self, v: f64, omega: f64) -> (f64, f64) {
        (v.clamp(0.0, self.v_max), omega.clamp(-self.omega_max, self.omega_max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WheelCommand {
    pub omega_l: f64,
    pub omega_r: f64,
}

const BOUND_SLACK: f64 = 1e-9;

pub fn wheel_speeds(v: f64, omega: f64, params: &PlantParams) -> Result<WheelCommand, PlantError> {
    if v < -BOUND_SLACK
        || v > params.v_max + BOUND_SLACK
        || omega.abs() > params.omega_max + BOUND_SLACK
        || !v.is_finite()
        || !omega.is_finite()
    {
        return Err(PlantError::Bounds { v, omega });
    }
    Ok(wheel_speeds_unchecked(v, omega, params))
}

fn wheel_speeds_unchecked(v: f64, omega: f64, params: &PlantParams) -> WheelCommand {
    let (r, l) = (params.wheel_radius, params.wheelbase);
    WheelCommand {
        omega_l: (2.0 * v - omega * l) / (2.0 * r),
        omega_r: (2.0 * v + omega * l) / (2.0 * r),
    }
}

pub fn power(cmd: WheelCommand, params: &PlantParams) -> f64 {
    params.power_p1 * (cmd.omega_l.abs() + cmd.omega_r.abs()) + params.power_p2
}

/// Power drawn while holding `(v, omega)`.
pub fn command_power(v: f64, omega: f64, params: &PlantParams) -> f64 {
    power(wheel_speeds_unchecked(v, omega, params), params)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoverState {
    pub p: Point,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub battery: f64,
}

impl RoverState {
    pub fn at(p: Point, theta: f64, battery: f64) -> Self {
        RoverState { p, theta, v: 0.0, omega: 0.0, battery }
    }
}

/// `sin(x)/x`, accurate near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Pose after holding `(v, omega)` for `t` seconds.
///
/// Uses the chord form of the arc, `v t sinc(ωt/2)` along the mean heading,
/// which equals the `(v/ω)(sin θ2 − sin θ1, cos θ1 − cos θ2)` closed form and
/// stays accurate as `ω → 0`.
pub fn integrate_pose(state: &RoverState, v: f64, omega: f64, t: f64) -> RoverState {
    let half = omega * t / 2.0;
    let chord = v * t * sinc(half);
    let mid = state.theta + half;
    RoverState {
        p: [state.p[0] + chord * mid.cos(), state.p[1] + chord * mid.sin()],
        theta: state.theta + omega * t,
        v,
        omega,
        battery: state.battery,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub obstacles: Vec<Polygon>,
    pub stations: Vec<Point>,
}

impl World {
    /// Signed distance to the nearest obstacle (`+inf` in an empty world).
    pub fn obstacle_distance(&self, p: Point) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.signed_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn line_of_sight(&self, a: Point, b: Point) -> bool {
        !self.obstacles.iter().any(|o| o.blocks(a, b))
    }

    /// Nearest station within `range` of `p` with a clear line of sight.
    pub fn visible_station(&self, p: Point, range: f64) -> Option<usize> {
        self.stations
            .iter()
            .enumerate()
            .filter(|(_, s)| geometry::dist(p, **s) <= range && self.line_of_sight(p, **s))
            .min_by(|a, b| geometry::dist(p, *a.1).total_cmp(&geometry::dist(p, *b.1)))
            .map(|(k, _)| k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorReading {
    pub ir: Vec<f64>,
    pub detected_ps: Option<usize>,
    pub d_o: f64,
}

pub fn sense(state: &RoverState, world: &World, params: &PlantParams) -> SensorReading {
    let ir = (0..params.sensor_count)
        .map(|k| {
            let cone = Cone {
                apex: state.p,
                heading: state.theta + params.sensor_heading(k),
                half: params.sensor_fov / 2.0,
                range: params.sensor_range,
            };
            world
                .obstacles
                .iter()
                .filter_map(|o| cone.first_hit(o))
                .fold(params.sensor_range, f64::min)
        })
        .collect();
    SensorReading {
        ir,
        detected_ps: world.visible_station(state.p, params.ps_detect_range),
        d_o: world.obstacle_distance(state.p),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantStep {
    pub state: RoverState,
    /// Energy drawn during the step.
    pub energy: f64,
    pub recharged: bool,
}

/// One plant update of `t` seconds: clamp the command, move, drain the
/// battery, and recharge to capacity if docking near a station.
pub fn plant_step(
    state: &RoverState,
    target: (f64, f64),
    params: &PlantParams,
    world: &World,
    dock: bool,
    t: f64,
) -> Result<PlantStep, PlantError> {
    let (v, omega) = params.clamp_command(target.0, target.1);
    let energy = command_power(v, omega, params) * t;
    if state.battery - energy <= 0.0 {
        return Err(PlantError::BatteryDepleted {
            battery: state.battery,
            needed: energy,
        });
    }
    let mut next = integrate_pose(state, v, omega, t);
    next.battery = state.battery - energy;
    let mut recharged = false;
    if dock && world.visible_station(next.p, params.ps_detect_range).is_some() {
        recharged = next.battery < params.battery_capacity;
        next.battery = params.battery_capacity;
    }
    Ok(PlantStep { state: next, energy, recharged })
}

/// The plant as a period-`period` component.
///
/// State: pose, velocities, battery and cumulative energy use. Inputs: the
/// Nav command and dock request. Outputs: IR readings, the visible station
/// index (`-1` for none) and the true obstacle distance.
pub fn plant_component(params: Arc<PlantParams>, world: Arc<World>, period: u64) -> Component {
    plant_component_with(params, world, period, true)
}

/// Like [`plant_component`]; with `metered` off the battery may run negative
/// instead of failing the step.
pub fn plant_component_with(params: Arc<PlantParams>, world: Arc<World>, period: u64, metered: bool) -> Component {
    let f_params = params.clone();
    let f_world = world.clone();
    Component::builder("Plant")
        .state([vars::P, vars::THETA, vars::V, vars::OMEGA, vars::B, vars::E_USED])
        .inputs([vars::V_T, vars::OMEGA_T, vars::DOCK])
        .outputs([vars::IR, vars::PS_VISIBLE, vars::D_O])
        .rate(
            RateEntry::new(period, move |view| {
                let battery = view.real(vars::B)?;
                let state = RoverState {
                    p: view.vec2(vars::P)?,
                    theta: view.real(vars::THETA)?,
                    v: view.real(vars::V)?,
                    omega: view.real(vars::OMEGA)?,
                    battery: if metered { battery } else { f64::INFINITY },
                };
                let target = (view.real(vars::V_T)?, view.real(vars::OMEGA_T)?);
                let t = period as f64 * view.dt();
                let step = plant_step(&state, target, &f_params, &f_world, view.bool(vars::DOCK)?, t)
                    .map_err(|e| StepError::Component {
                        component: "Plant".into(),
                        message: e.to_string(),
                    })?;
                let s = step.state;
                let b = if metered { s.battery } else { battery - step.energy };
                Ok(vec![
                    (vars::P.into(), Value::Vec2(s.p)),
                    (vars::THETA.into(), Value::Real(s.theta)),
                    (vars::V.into(), Value::Real(s.v)),
                    (vars::OMEGA.into(), Value::Real(s.omega)),
                    (vars::B.into(), Value::Real(b)),
                    (vars::E_USED.into(), Value::Real(view.real(vars::E_USED)? + step.energy)),
                ])
            })
            .with_output(move |view| {
                let state = RoverState::at(view.vec2(vars::P)?, view.real(vars::THETA)?, 0.0);
                let reading = sense(&state, &world, &params);
                Ok(sensor_assignments(&reading))
            }),
        )
        .build()
        .expect("plant variable sets are disjoint")
}

pub fn sensor_assignments(reading: &SensorReading) -> Vec<(crate::sync::VarId, Value)> {
    vec![
        (
            vars::IR.into(),
            Value::seq(reading.ir.iter().map(|d| Value::Real(*d)).collect()),
        ),
        (
            vars::PS_VISIBLE.into(),
            Value::Int(reading.detected_ps.map_or(-1, |k| k as i64)),
        ),
        (vars::D_O.into(), Value::Real(reading.d_o)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PlantParams {
        PlantParams::default()
    }

    #[test]
    fn wheel_speed_examples() {
        let p = params();
        assert_eq!(wheel_speeds(0.0, 0.0, &p).unwrap(), WheelCommand { omega_l: 0.0, omega_r: 0.0 });
        let w = wheel_speeds(0.8, 0.0, &p).unwrap();
        assert!((w.omega_l - 0.8 / 0.0325).abs() < 1e-12);
        assert!((w.omega_l - 24.6154).abs() < 1e-4);
        assert_eq!(w.omega_l, w.omega_r);
        let w = wheel_speeds(0.0, 7.0 * PI, &p).unwrap();
        let expect = 7.0 * PI * 0.09925 / (2.0 * 0.0325);
        assert!((w.omega_r - expect).abs() < 1e-12);
        assert!((w.omega_r - 33.58).abs() < 0.01);
        assert_eq!(w.omega_l, -w.omega_r);
        assert!(wheel_speeds(1.0, 0.0, &p).is_err());
        assert!(wheel_speeds(0.0, 8.0 * PI, &p).is_err());
    }

    #[test]
    fn power_examples() {
        let p = params();
        assert!((power(WheelCommand { omega_l: 0.0, omega_r: 0.0 }, &p) - 0.01).abs() < 1e-15);
        let x = 0.8 / 0.0325;
        let pw = power(WheelCommand { omega_l: x, omega_r: x }, &p);
        assert!((pw - (0.15 * 2.0 * x + 0.01)).abs() < 1e-12);
        assert!((pw - 7.3946).abs() < 1e-4);
        assert_eq!(
            power(WheelCommand { omega_l: -x, omega_r: -x }, &p),
            power(WheelCommand { omega_l: x, omega_r: x }, &p)
        );
    }

    #[test]
    fn max_power_bounds_every_command() {
        let p = params();
        let pmax = p.max_power();
        for i in 0..=40 {
            for j in -40..=40 {
                let v = p.v_max * i as f64 / 40.0;
                let w = p.omega_max * j as f64 / 40.0;
                assert!(command_power(v, w, &p) <= pmax + 1e-12);
            }
        }
        // The bound is attained by a full-speed turn in place.
        assert!((command_power(0.0, p.omega_max, &p) - pmax).abs() < 1e-12);
    }

    #[test]
    fn pose_examples() {
        let s = RoverState::at([0.0, 0.0], 0.0, 1.0);
        let n = integrate_pose(&s, 1.0, 0.0, 1.0);
        assert_eq!((n.p, n.theta), ([1.0, 0.0], 0.0));
        let n = integrate_pose(&s, PI / 4.0, PI / 2.0, 1.0);
        assert!((n.p[0] - 0.5).abs() < 1e-12 && (n.p[1] - 0.5).abs() < 1e-12);
        assert!((n.theta - PI / 2.0).abs() < 1e-15);
        let s = RoverState::at([0.3, -0.2], 1.0, 1.0);
        let n = integrate_pose(&s, 0.0, 7.0 * PI, 1.0 / 7.0);
        assert_eq!(n.p, s.p);
        assert!((n.theta - (1.0 + PI)).abs() < 1e-12);
    }

    #[test]
    fn chord_form_matches_textbook_arc() {
        let s = RoverState::at([0.1, 0.2], 0.7, 1.0);
        for (v, w, t) in [(0.5, 3.0, 0.1), (0.8, -7.0 * PI, 0.2), (0.2, 0.01, 0.05)] {
            let n = integrate_pose(&s, v, w, t);
            let th2 = s.theta + w * t;
            let x = s.p[0] + v / w * (th2.sin() - s.theta.sin());
            let y = s.p[1] + v / w * (s.theta.cos() - th2.cos());
            assert!((n.p[0] - x).abs() < 1e-12 && (n.p[1] - y).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_world_sensing() {
        let r = sense(&RoverState::at([0.0, 0.0], 0.0, 1.0), &World::default(), &params());
        assert!(r.ir.iter().all(|d| *d == 0.8));
        assert_eq!(r.d_o, f64::INFINITY);
        assert_eq!(r.detected_ps, None);
    }

    #[test]
    fn wall_ahead_seen_only_by_front_sensor() {
        let world = World {
            obstacles: vec![Polygon::rect(0.4, -0.1, 0.5, 0.1)],
            stations: vec![],
        };
        let r = sense(&RoverState::at([0.0, 0.0], 0.0, 1.0), &world, &params());
        assert!((r.ir[0] - 0.4).abs() < 1e-12);
        assert!(r.ir[1..].iter().all(|d| *d == 0.8));
        assert!((r.d_o - 0.4).abs() < 1e-12);
    }

    #[test]
    fn station_detection_needs_range_and_sight() {
        let mut world = World { obstacles: vec![], stations: vec![[0.09, 0.0]] };
        let s = RoverState::at([0.0, 0.0], 0.0, 1.0);
        assert_eq!(sense(&s, &world, &params()).detected_ps, Some(0));
        world.stations = vec![[0.11, 0.0]];
        assert_eq!(sense(&s, &world, &params()).detected_ps, None);
        world.stations = vec![[0.09, 0.0]];
        world.obstacles = vec![Polygon::rect(0.04, -0.2, 0.05, 0.2)];
        assert_eq!(sense(&s, &world, &params()).detected_ps, None);
    }

    #[test]
    fn plant_step_examples() {
        let p = params();
        let w = World { obstacles: vec![], stations: vec![[5.0, 5.0]] };
        let s = RoverState::at([1.0, 1.0], 0.3, 50.0);
        let n = plant_step(&s, (0.0, 0.0), &p, &w, false, 0.05).unwrap();
        assert_eq!(n.state.p, s.p);
        assert!((n.state.battery - (50.0 - 0.01 * 0.05)).abs() < 1e-12);

        let n = plant_step(&s, (2.0 * p.v_max, 0.0), &p, &w, false, 0.05).unwrap();
        assert_eq!(n.state.v, p.v_max);

        let near = RoverState::at([4.95, 5.0], 0.0, 20.0);
        let n = plant_step(&near, (0.0, 0.0), &p, &w, true, 0.05).unwrap();
        assert_eq!(n.state.battery, p.battery_capacity);
        assert!(n.recharged);
        let n = plant_step(&near, (0.0, 0.0), &p, &w, false, 0.05).unwrap();
        assert!(n.state.battery < 20.0);

        let empty = RoverState::at([0.0, 0.0], 0.0, 1e-4);
        assert!(matches!(
            plant_step(&empty, (0.8, 0.0), &p, &w, false, 0.05),
            Err(PlantError::BatteryDepleted { .. })
        ));
    }

    #[test]
    fn blind_spot_condition() {
        let mut p = params();
        assert!(p.problems().is_empty());
        p.sensor_fov = 2.0 * PI / 8.0;
        assert!(!p.problems().is_empty());
    }
}
