//! Scenario configuration: vehicles, geometry and reward constants.
//!
//! Serialized as TOML; every field has a default matching the standard
//! four-vehicle congestion scenario.

use super::geometry::LaneGeometry;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Physical and sensing constants of the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConstants {
    /// Number of lidar rays spread over 360 degrees.
    pub ray_count: usize,
    /// Maximum lidar range in meters.
    pub ray_max: f64,
    /// Vehicle disc radius seen by the lidar.
    pub vehicle_radius: f64,
    /// Longitudinal safety gap; closer same-lane vehicles collide.
    pub safety_gap: f64,
    /// Global command bounds.
    pub max_linear_speed: f64,
    pub max_angular_speed: f64,
    /// Heading clamp keeping forward progress nonnegative.
    pub heading_limit: f64,
    /// Travel normalization (maximum displacement per step).
    pub travel_norm: f64,
    /// Collision penalty fed into the team reward.
    pub collision_penalty: f64,
}

impl Default for EnvConstants {
    fn default() -> Self {
        Self {
            ray_count: 36,
            ray_max: 5.0,
            vehicle_radius: 0.1,
            safety_gap: 0.3,
            max_linear_speed: 0.2,
            max_angular_speed: 0.3,
            heading_limit: std::f64::consts::FRAC_PI_3,
            travel_norm: 0.2,
            collision_penalty: -20.0,
        }
    }
}

/// One vehicle slot in the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    /// Scripted vehicles drive straight at a fixed speed and do not learn.
    #[serde(default)]
    pub scripted: bool,
    /// Starting lane.
    pub lane: usize,
    /// Fixed longitudinal position (scripted vehicles); learners spawn
    /// uniformly inside `spawn_range` when this is absent.
    #[serde(default)]
    pub x: Option<f64>,
    /// Fixed speed for scripted vehicles.
    #[serde(default)]
    pub speed: Option<f64>,
    /// Spawn interval for random placement.
    #[serde(default)]
    pub spawn_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub geometry: LaneGeometry,
    pub constants: EnvConstants,
    pub vehicles: Vec<VehicleSpec>,
    /// Steps per episode. The two published values are 30 and 18; 30 is the
    /// default and both are selectable here.
    pub episode_length: u32,
    /// Team-reward weight between collision penalty and forward progress.
    pub alpha_team: f64,
    /// Intrinsic-reward weight between lane deviation and travel.
    pub beta_mix: f64,
    /// Common initial speed of learning vehicles.
    pub initial_speed: f64,
    /// Default spawn interval for learners without an explicit range.
    pub spawn_range: (f64, f64),
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            geometry: LaneGeometry::default(),
            constants: EnvConstants::default(),
            vehicles: congestion_vehicles(),
            episode_length: 30,
            alpha_team: 0.7,
            beta_mix: 0.5,
            initial_speed: 0.08,
            spawn_range: (0.0, 3.4),
        }
    }
}

/// Standard scenario: three learners and one slow scripted vehicle blocking
/// lane 0 ahead, forcing the lane-0 learner to slow down or merge.
fn congestion_vehicles() -> Vec<VehicleSpec> {
    vec![
        VehicleSpec {
            scripted: false,
            lane: 0,
            x: None,
            speed: None,
            spawn_range: Some((2.0, 3.4)),
        },
        VehicleSpec {
            scripted: false,
            lane: 1,
            x: None,
            speed: None,
            spawn_range: None,
        },
        VehicleSpec {
            scripted: false,
            lane: 1,
            x: None,
            speed: None,
            spawn_range: None,
        },
        VehicleSpec {
            scripted: true,
            lane: 0,
            x: Some(4.5),
            speed: Some(0.02),
            spawn_range: None,
        },
    ]
}

impl ScenarioConfig {
    /// Single-vehicle scenario used for low-level skill training.
    pub fn single_vehicle() -> Self {
        Self {
            vehicles: vec![VehicleSpec {
                scripted: false,
                lane: 0,
                x: None,
                speed: None,
                spawn_range: None,
            }],
            ..Self::default()
        }
    }

    /// Two-learner scenario used by the fast profile.
    pub fn two_vehicle() -> Self {
        Self {
            vehicles: vec![
                VehicleSpec {
                    scripted: false,
                    lane: 0,
                    x: None,
                    speed: None,
                    spawn_range: None,
                },
                VehicleSpec {
                    scripted: false,
                    lane: 1,
                    x: None,
                    speed: None,
                    spawn_range: None,
                },
            ],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.vehicles.is_empty() || self.vehicles.len() > 8 {
            return Err(Error::Config(format!(
                "vehicle count {} outside supported range 1..=8",
                self.vehicles.len()
            )));
        }
        if self.episode_length == 0 {
            return Err(Error::Config("episode_length must be positive".into()));
        }
        for w in [self.alpha_team, self.beta_mix] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::Config(format!("reward weights must be in [0, 1], got {w}")));
            }
        }
        if !(self.initial_speed >= 0.0 && self.initial_speed <= self.constants.max_linear_speed) {
            return Err(Error::Config("initial_speed outside command bounds".into()));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            if v.lane >= self.geometry.lane_count {
                return Err(Error::Config(format!("vehicle {i} placed on missing lane {}", v.lane)));
            }
            if v.scripted && v.x.is_none() {
                return Err(Error::Config(format!("scripted vehicle {i} needs a fixed position")));
            }
        }
        if self.constants.ray_count == 0 {
            return Err(Error::Config("ray_count must be positive".into()));
        }
        Ok(())
    }

    pub fn learner_count(&self) -> usize {
        self.vehicles.iter().filter(|v| !v.scripted).count()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serialization cannot fail")
    }
}
