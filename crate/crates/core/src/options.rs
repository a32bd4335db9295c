//! The four high-level options: initiation, termination and per-option
//! action bounds, plus the per-agent execution record that supports
//! asynchronous termination.

use crate::env::{HighObservation, LaneGeometry, LowObservation};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed duration of the in-lane options.
pub const IN_LANE_DURATION: u32 = 5;
/// Maximum duration of a lane change before it counts as failed.
pub const LANE_CHANGE_MAX_DURATION: u32 = 10;
/// A lane change succeeds once the lateral error to the target lane center
/// drops below this fraction of the lane width.
pub const LANE_CHANGE_SUCCESS_FRACTION: f64 = 0.1;

/// Temporally extended high-level actions with a stable integer encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum OptionId {
    KeepLane = 0,
    SlowDown = 1,
    Accelerate = 2,
    LaneChange = 3,
}

impl OptionId {
    pub const COUNT: usize = 4;
    pub const ALL: [OptionId; 4] = [
        OptionId::KeepLane,
        OptionId::SlowDown,
        OptionId::Accelerate,
        OptionId::LaneChange,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("option index {i} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            OptionId::KeepLane => "keep_lane",
            OptionId::SlowDown => "slow_down",
            OptionId::Accelerate => "accelerate",
            OptionId::LaneChange => "lane_change",
        }
    }
}

impl std::fmt::Display for OptionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Primitive-action bounds of an option. Keep-lane holds the previous
/// commands instead of sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionBounds {
    HoldPrevious,
    Sampled {
        linear: (f64, f64),
        angular: (f64, f64),
    },
}

/// Per-option bounds. The lane-change angular range is a magnitude; the
/// runtime orients it toward the target lane.
pub fn action_bounds(id: OptionId) -> ActionBounds {
    match id {
        OptionId::KeepLane => ActionBounds::HoldPrevious,
        OptionId::SlowDown => ActionBounds::Sampled {
            linear: (0.04, 0.08),
            angular: (-0.1, 0.1),
        },
        OptionId::Accelerate => ActionBounds::Sampled {
            linear: (0.08, 0.14),
            angular: (-0.1, 0.1),
        },
        OptionId::LaneChange => ActionBounds::Sampled {
            linear: (0.1, 0.2),
            angular: (0.12, 0.25),
        },
    }
}

/// Static description of one option: duration limits plus its initiation
/// and termination predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub id: OptionId,
    pub max_duration: u32,
    pub bounds: ActionBounds,
}

impl OptionSpec {
    pub fn of(id: OptionId) -> Self {
        let max_duration = match id {
            OptionId::LaneChange => LANE_CHANGE_MAX_DURATION,
            _ => IN_LANE_DURATION,
        };
        Self {
            id,
            max_duration,
            bounds: action_bounds(id),
        }
    }

    /// Initiation predicate: lane change requires an adjacent lane and no
    /// maneuver already in flight; the other options are always available.
    pub fn available(
        &self,
        obs: &HighObservation,
        geometry: &LaneGeometry,
        mid_lane_change: bool,
    ) -> bool {
        match self.id {
            OptionId::LaneChange => {
                !mid_lane_change && geometry.adjacent_lane(obs.lane_id).is_some()
            }
            _ => true,
        }
    }

    /// Termination predicate. Lane change succeeds on a small lateral error
    /// to the target lane center and always ends at its maximum duration;
    /// the in-lane options run for a fixed number of steps.
    pub fn terminated(&self, obs: &LowObservation, steps_elapsed: u32, lane_width: f64) -> bool {
        if steps_elapsed >= self.max_duration {
            return true;
        }
        match self.id {
            OptionId::LaneChange => {
                let lane_offset =
                    (obs.target_lane_id as f64 - obs.lane_id as f64) * lane_width;
                let error = (obs.lateral_deviation - lane_offset).abs();
                error < LANE_CHANGE_SUCCESS_FRACTION * lane_width
            }
            _ => false,
        }
    }
}

/// Options the agent may select in the given situation, in id order.
pub fn available_options(
    obs: &HighObservation,
    geometry: &LaneGeometry,
    mid_lane_change: bool,
) -> Vec<OptionId> {
    OptionId::ALL
        .iter()
        .copied()
        .filter(|&id| OptionSpec::of(id).available(obs, geometry, mid_lane_change))
        .collect()
}

/// Availability as a mask over the four options.
pub fn availability_mask(
    obs: &HighObservation,
    geometry: &LaneGeometry,
    mid_lane_change: bool,
) -> [bool; OptionId::COUNT] {
    let mut mask = [false; OptionId::COUNT];
    for &id in &OptionId::ALL {
        mask[id.index()] = OptionSpec::of(id).available(obs, geometry, mid_lane_change);
    }
    mask
}

/// Running record of one option execution.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionExecution {
    pub option: OptionId,
    pub start_step: u32,
    pub steps_elapsed: u32,
    pub accumulated_high_reward: f64,
    /// Target of an active lane change.
    pub target_lane: Option<usize>,
    /// Per-step rewards backing the accumulated sum.
    pub reward_log: Vec<f64>,
}

impl OptionExecution {
    pub fn begin(option: OptionId, start_step: u32, target_lane: Option<usize>) -> Self {
        Self {
            option,
            start_step,
            steps_elapsed: 0,
            accumulated_high_reward: 0.0,
            target_lane,
            reward_log: Vec::new(),
        }
    }

    pub fn record_step(&mut self, reward: f64) {
        self.steps_elapsed += 1;
        self.accumulated_high_reward += reward;
        self.reward_log.push(reward);
    }

    /// Re-sum of the per-step log; equals `accumulated_high_reward` exactly
    /// because both run the same left-to-right addition.
    pub fn resummed_reward(&self) -> f64 {
        let mut acc = 0.0;
        for &r in &self.reward_log {
            acc += r;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs_in_lane(lane: usize) -> HighObservation {
        HighObservation {
            lidar: vec![5.0; 36],
            speed: 0.08,
            lane_id: lane,
        }
    }

    fn low_obs(lane: usize, target: usize, deviation: f64) -> LowObservation {
        LowObservation {
            rays: vec![5.0; 36],
            lateral_deviation: deviation,
            heading_error: 0.0,
            speed: 0.08,
            lane_id: lane,
            target_lane_id: target,
        }
    }

    #[test]
    fn all_options_available_by_default() {
        let g = LaneGeometry::default();
        let opts = available_options(&obs_in_lane(0), &g, false);
        assert_eq!(opts, OptionId::ALL.to_vec());
    }

    #[test]
    fn mid_maneuver_excludes_lane_change() {
        let g = LaneGeometry::default();
        let opts = available_options(&obs_in_lane(0), &g, true);
        assert_eq!(
            opts,
            vec![OptionId::KeepLane, OptionId::SlowDown, OptionId::Accelerate]
        );
    }

    #[test]
    fn single_lane_track_never_offers_lane_change() {
        let g = LaneGeometry {
            lane_count: 1,
            ..LaneGeometry::default()
        };
        let opts = available_options(&obs_in_lane(0), &g, false);
        assert!(!opts.contains(&OptionId::LaneChange));
    }

    #[test]
    fn every_option_terminates_at_max_duration() {
        for &id in &OptionId::ALL {
            let spec = OptionSpec::of(id);
            // Far from any success condition.
            let obs = low_obs(0, 1, 0.0);
            assert!(spec.terminated(&obs, spec.max_duration, 0.5));
        }
    }

    #[test]
    fn lane_change_succeeds_inside_window() {
        let spec = OptionSpec::of(OptionId::LaneChange);
        // Crossed into the target lane: lane_id == target, small deviation.
        let obs = low_obs(1, 1, 0.04 * 0.5);
        assert!(spec.terminated(&obs, 6, 0.5));
        // Still in the source lane, full lane width away.
        let far = low_obs(0, 1, 0.0);
        assert!(!spec.terminated(&far, 6, 0.5));
    }

    #[test]
    fn in_lane_options_run_fixed_duration() {
        let spec = OptionSpec::of(OptionId::KeepLane);
        let obs = low_obs(0, 0, 0.0);
        assert!(!spec.terminated(&obs, 4, 0.5));
        assert!(spec.terminated(&obs, 5, 0.5));
    }

    #[test]
    fn bounds_match_published_table() {
        assert_eq!(
            action_bounds(OptionId::SlowDown),
            ActionBounds::Sampled {
                linear: (0.04, 0.08),
                angular: (-0.1, 0.1)
            }
        );
        assert_eq!(
            action_bounds(OptionId::LaneChange),
            ActionBounds::Sampled {
                linear: (0.1, 0.2),
                angular: (0.12, 0.25)
            }
        );
        assert_eq!(action_bounds(OptionId::KeepLane), ActionBounds::HoldPrevious);
    }

    #[test]
    fn execution_resums_exactly() {
        let mut exec = OptionExecution::begin(OptionId::SlowDown, 0, None);
        for r in [0.3, -13.85, 0.001, 0.7] {
            exec.record_step(r);
        }
        assert_eq!(exec.accumulated_high_reward, exec.resummed_reward());
        assert_eq!(exec.steps_elapsed, 4);
    }

    #[test]
    fn option_encoding_is_stable() {
        assert_eq!(OptionId::KeepLane.index(), 0);
        assert_eq!(OptionId::SlowDown.index(), 1);
        assert_eq!(OptionId::Accelerate.index(), 2);
        assert_eq!(OptionId::LaneChange.index(), 3);
        for &id in &OptionId::ALL {
            assert_eq!(OptionId::from_index(id.index()).unwrap(), id);
        }
        assert!(OptionId::from_index(4).is_err());
    }
}
