//! Deterministic kinematic simulator core.
//!
//! Vehicles follow unicycle kinematics with a unit time step:
//! `x += v cos(theta)`, `y += v sin(theta)`, `theta += omega` (then clamped).
//! Identical state and actions reproduce identical bits.

use super::geometry::LaneGeometry;
use super::scenario::{EnvConstants, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use rand::Rng as _;
use std::collections::{BTreeMap, BTreeSet};

/// Identifier of a vehicle; stable across an episode, assigned in config order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VehicleId(pub u32);

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Primitive command: linear speed (m/s) and angular speed (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub linear: f64,
    pub angular: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub linear_speed: f64,
    pub angular_speed: f64,
    /// Nearest lane center (ties toward the lower index).
    pub lane_id: usize,
    pub scripted: bool,
}

/// Motion-derived events of one step. Lane-change outcomes are filled in by
/// the option runtime, which owns maneuver bookkeeping.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEvents {
    /// Colliding pairs, each stored once with the lower id first.
    pub collisions: Vec<(VehicleId, VehicleId)>,
    pub lane_change_completed: BTreeSet<VehicleId>,
    pub lane_change_failed: BTreeSet<VehicleId>,
    pub off_track: BTreeSet<VehicleId>,
    /// Longitudinal displacement of each vehicle this step.
    pub travel: BTreeMap<VehicleId, f64>,
}

impl StepEvents {
    pub fn collided(&self, id: VehicleId) -> bool {
        self.collisions.iter().any(|&(a, b)| a == id || b == id)
    }

    pub fn travel_of(&self, id: VehicleId) -> f64 {
        self.travel.get(&id).copied().unwrap_or(0.0)
    }
}

/// High-level observation: 360-degree ray distances plus speed and lane.
#[derive(Debug, Clone, PartialEq)]
pub struct HighObservation {
    pub lidar: Vec<f64>,
    pub speed: f64,
    pub lane_id: usize,
}

impl HighObservation {
    pub fn dim(ray_count: usize) -> usize {
        ray_count + 2
    }

    /// Network encoding: rays scaled to [0, 1], speed scaled by the command
    /// bound, lane id raw.
    pub fn to_vector(&self, constants: &EnvConstants) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.lidar.len() + 2);
        v.extend(self.lidar.iter().map(|&r| r / constants.ray_max));
        v.push(self.speed / constants.max_linear_speed);
        v.push(self.lane_id as f64);
        v
    }
}

/// Low-level observation: rays plus lane-relative pose. The upstream camera
/// input is replaced by these geometric features.
#[derive(Debug, Clone, PartialEq)]
pub struct LowObservation {
    pub rays: Vec<f64>,
    /// Signed distance from the current lane center.
    pub lateral_deviation: f64,
    /// Heading error relative to the lane direction (+x).
    pub heading_error: f64,
    pub speed: f64,
    pub lane_id: usize,
    /// Lane targeted by an active lane change; equals `lane_id` otherwise.
    pub target_lane_id: usize,
}

impl LowObservation {
    pub fn dim(ray_count: usize) -> usize {
        ray_count + 5
    }

    pub fn to_vector(&self, geometry: &LaneGeometry, constants: &EnvConstants) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.rays.len() + 5);
        v.extend(self.rays.iter().map(|&r| r / constants.ray_max));
        v.push(self.lateral_deviation / (geometry.lane_width / 2.0));
        v.push(self.heading_error / constants.heading_limit);
        v.push(self.speed / constants.max_linear_speed);
        v.push(self.lane_id as f64);
        v.push(self.target_lane_id as f64 - self.lane_id as f64);
        v
    }
}

/// Full simulator world: vehicles, lanes, step counter and placement RNG.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub vehicles: Vec<VehicleState>,
    pub geometry: LaneGeometry,
    pub constants: EnvConstants,
    pub step: u32,
    pub episode_length: u32,
    config: ScenarioConfig,
    rng: Rng,
}

impl EnvState {
    /// Builds and places an episode from a scenario and seed.
    pub fn from_config(config: &ScenarioConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut env = Self {
            vehicles: Vec::new(),
            geometry: config.geometry.clone(),
            constants: config.constants.clone(),
            step: 0,
            episode_length: config.episode_length,
            config: config.clone(),
            rng: rng_from_seed(seed),
        };
        env.reset(seed)?;
        Ok(env)
    }

    /// Re-places all vehicles. Learners spawn at random non-overlapping
    /// longitudinal positions (same-lane gaps of at least twice the safety
    /// gap) with the common initial speed; scripted vehicles sit at their
    /// fixed positions and plod at their fixed speed.
    pub fn reset(&mut self, seed: u64) -> Result<()> {
        self.rng = rng_from_seed(seed);
        self.step = 0;
        let min_gap = 2.0 * self.constants.safety_gap;
        'attempt: for attempt in 0..100 {
            let mut vehicles = Vec::with_capacity(self.config.vehicles.len());
            for (i, spec) in self.config.vehicles.iter().enumerate() {
                let x = match spec.x {
                    Some(x) => x,
                    None => {
                        let (lo, hi) = spec.spawn_range.unwrap_or(self.config.spawn_range);
                        self.rng.gen_range(lo..=hi)
                    }
                };
                vehicles.push(VehicleState {
                    id: VehicleId(i as u32),
                    x,
                    y: self.geometry.lane_center(spec.lane),
                    heading: 0.0,
                    linear_speed: if spec.scripted {
                        spec.speed.unwrap_or(0.0)
                    } else {
                        self.config.initial_speed
                    },
                    angular_speed: 0.0,
                    lane_id: spec.lane,
                    scripted: spec.scripted,
                });
            }
            for a in 0..vehicles.len() {
                for b in (a + 1)..vehicles.len() {
                    if vehicles[a].lane_id == vehicles[b].lane_id
                        && (vehicles[a].x - vehicles[b].x).abs() < min_gap
                    {
                        if attempt == 99 {
                            return Err(Error::Config(
                                "could not place vehicles without overlap in 100 attempts".into(),
                            ));
                        }
                        continue 'attempt;
                    }
                }
            }
            self.vehicles = vehicles;
            return Ok(());
        }
        unreachable!()
    }

    pub fn vehicle(&self, id: VehicleId) -> Result<&VehicleState> {
        self.vehicles
            .iter()
            .find(|v| v.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown vehicle id {id}")))
    }

    pub fn learner_ids(&self) -> Vec<VehicleId> {
        self.vehicles
            .iter()
            .filter(|v| !v.scripted)
            .map(|v| v.id)
            .collect()
    }

    pub fn episode_over(&self) -> bool {
        self.step >= self.episode_length
    }

    /// Advances the world one step. Commands are required for every learning
    /// vehicle and ignored for scripted ones; unknown ids and non-finite
    /// commands are rejected before any state changes.
    pub fn step(&mut self, actions: &BTreeMap<VehicleId, Command>) -> Result<StepEvents> {
        for (&id, cmd) in actions {
            let v = self.vehicle(id)?;
            if v.scripted {
                return Err(Error::InvalidArgument(format!(
                    "vehicle {id} is scripted and takes no commands"
                )));
            }
            if !cmd.linear.is_finite() || !cmd.angular.is_finite() {
                return Err(Error::NonFinite(format!("command for vehicle {id}")));
            }
        }
        for v in &self.vehicles {
            if !v.scripted && !actions.contains_key(&v.id) {
                return Err(Error::InvalidArgument(format!(
                    "missing command for vehicle {}",
                    v.id
                )));
            }
        }

        let mut events = StepEvents::default();
        let limit = self.constants.heading_limit;
        for v in &mut self.vehicles {
            let (linear, angular) = if v.scripted {
                (v.linear_speed, 0.0)
            } else {
                let cmd = &actions[&v.id];
                (
                    cmd.linear.clamp(0.0, self.constants.max_linear_speed),
                    cmd.angular
                        .clamp(-self.constants.max_angular_speed, self.constants.max_angular_speed),
                )
            };
            let x0 = v.x;
            v.x += linear * v.heading.cos();
            v.y += linear * v.heading.sin();
            v.heading = (v.heading + angular).clamp(-limit, limit);
            v.linear_speed = linear;
            v.angular_speed = angular;
            v.lane_id = self.geometry.nearest_lane(v.y);
            events.travel.insert(v.id, v.x - x0);
        }
        self.step += 1;

        events.collisions = collision_check(&self.vehicles, &self.geometry, &self.constants);
        let (lo, hi) = self.geometry.lateral_bounds();
        for v in &self.vehicles {
            if v.y < lo || v.y > hi {
                events.off_track.insert(v.id);
            }
        }
        Ok(events)
    }

    /// 360-degree range scan for one vehicle. Ray `k` leaves at angle
    /// `heading + 2*pi*k/K` and reports the distance to the nearest other
    /// vehicle disc, or the maximum range.
    pub fn lidar_scan(&self, id: VehicleId) -> Result<Vec<f64>> {
        let ego = self.vehicle(id)?;
        let k = self.constants.ray_count;
        let mut rays = vec![self.constants.ray_max; k];
        for (i, ray) in rays.iter_mut().enumerate() {
            let angle = ego.heading + 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            let (dx, dy) = (angle.cos(), angle.sin());
            for other in &self.vehicles {
                if other.id == id {
                    continue;
                }
                if let Some(t) = ray_circle_distance(
                    ego.x,
                    ego.y,
                    dx,
                    dy,
                    other.x,
                    other.y,
                    self.constants.vehicle_radius,
                ) {
                    if t < *ray {
                        *ray = t;
                    }
                }
            }
        }
        Ok(rays)
    }

    pub fn high_observation(&self, id: VehicleId) -> Result<HighObservation> {
        let v = self.vehicle(id)?;
        Ok(HighObservation {
            lidar: self.lidar_scan(id)?,
            speed: v.linear_speed,
            lane_id: v.lane_id,
        })
    }

    pub fn low_observation(&self, id: VehicleId, target_lane: Option<usize>) -> Result<LowObservation> {
        let v = self.vehicle(id)?;
        Ok(LowObservation {
            rays: self.lidar_scan(id)?,
            lateral_deviation: v.y - self.geometry.lane_center(v.lane_id),
            heading_error: v.heading,
            speed: v.linear_speed,
            lane_id: v.lane_id,
            target_lane_id: target_lane.unwrap_or(v.lane_id),
        })
    }
}

/// Distance along a unit ray from `(px, py)` to a circle of radius `r` at
/// `(cx, cy)`; `None` when the ray misses. A ray starting inside reads zero.
fn ray_circle_distance(px: f64, py: f64, dx: f64, dy: f64, cx: f64, cy: f64, r: f64) -> Option<f64> {
    let ox = cx - px;
    let oy = cy - py;
    let b = ox * dx + oy * dy;
    let c = ox * ox + oy * oy - r * r;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 || b <= 0.0 {
        return None;
    }
    let t = b - disc.sqrt();
    (t >= 0.0).then_some(t)
}

/// Pairwise collision rule: lateral overlap within half a lane width and
/// longitudinal distance within the safety gap. Symmetric and irreflexive.
pub fn collision_check(
    vehicles: &[VehicleState],
    geometry: &LaneGeometry,
    constants: &EnvConstants,
) -> Vec<(VehicleId, VehicleId)> {
    let mut pairs = Vec::new();
    for a in 0..vehicles.len() {
        for b in (a + 1)..vehicles.len() {
            let (va, vb) = (&vehicles[a], &vehicles[b]);
            if (va.y - vb.y).abs() < geometry.lane_width / 2.0
                && (va.x - vb.x).abs() < constants.safety_gap
            {
                let (lo, hi) = if va.id <= vb.id { (va.id, vb.id) } else { (vb.id, va.id) };
                pairs.push((lo, hi));
            }
        }
    }
    pairs
}
