//! Team and intrinsic reward functions.

use super::scenario::EnvConstants;
use super::sim::{LowObservation, StepEvents, VehicleId};
use crate::error::{Error, Result};
use crate::options::OptionId;

/// Normalized forward-progress reward in [0, 1].
pub fn travel_reward(events: &StepEvents, id: VehicleId, constants: &EnvConstants) -> f64 {
    (events.travel_of(id) / constants.travel_norm).clamp(0.0, 1.0)
}

/// High-level team reward `alpha * r_col + (1 - alpha) * r_travel`, where
/// the collision term applies to every vehicle in a colliding pair.
pub fn high_reward(
    events: &StepEvents,
    id: VehicleId,
    alpha: f64,
    constants: &EnvConstants,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let r_col = if events.collided(id) {
        constants.collision_penalty
    } else {
        0.0
    };
    Ok(alpha * r_col + (1.0 - alpha) * travel_reward(events, id, constants))
}

/// Intrinsic (skill-training) reward.
///
/// In-lane options mix a lane-deviation penalty with forward progress; the
/// lane-change option pays +20 on completion, -20 on failure (timeout or a
/// collision during the maneuver) and forward progress otherwise.
pub fn intrinsic_reward(
    option: OptionId,
    id: VehicleId,
    next_obs: &LowObservation,
    events: &StepEvents,
    beta: f64,
    lane_width: f64,
    constants: &EnvConstants,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("beta must be in [0, 1], got {beta}")));
    }
    let r_travel = travel_reward(events, id, constants);
    Ok(match option {
        OptionId::KeepLane | OptionId::SlowDown | OptionId::Accelerate => {
            let r_deviate =
                (-(next_obs.lateral_deviation.abs()) / (lane_width / 2.0)).clamp(-1.0, 0.0);
            beta * r_deviate + (1.0 - beta) * r_travel
        }
        OptionId::LaneChange => {
            if events.lane_change_completed.contains(&id) {
                20.0
            } else if events.lane_change_failed.contains(&id) {
                -20.0
            } else {
                r_travel
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn constants() -> EnvConstants {
        EnvConstants::default()
    }

    fn events_with(travel: f64, collided: bool) -> StepEvents {
        let mut travel_map = BTreeMap::new();
        travel_map.insert(VehicleId(0), travel);
        StepEvents {
            collisions: if collided {
                vec![(VehicleId(0), VehicleId(1))]
            } else {
                Vec::new()
            },
            travel: travel_map,
            ..StepEvents::default()
        }
    }

    fn obs_with_deviation(dev: f64) -> LowObservation {
        LowObservation {
            rays: vec![5.0; 36],
            lateral_deviation: dev,
            heading_error: 0.0,
            speed: 0.0,
            lane_id: 0,
            target_lane_id: 0,
        }
    }

    #[test]
    fn idle_without_collision_scores_zero() {
        let r = high_reward(&events_with(0.0, false), VehicleId(0), 0.7, &constants()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn collision_with_travel_matches_formula() {
        // 0.7 * (-20) + 0.3 * (0.1 / 0.2) = -13.85
        let r = high_reward(&events_with(0.1, true), VehicleId(0), 0.7, &constants()).unwrap();
        assert!((r + 13.85).abs() < 1e-12, "got {r}");
    }

    #[test]
    fn zero_alpha_full_speed_is_one() {
        let r = high_reward(&events_with(0.2, false), VehicleId(0), 0.0, &constants()).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn lane_change_completion_pays_twenty() {
        let mut events = events_with(0.05, false);
        events.lane_change_completed.insert(VehicleId(0));
        let r = intrinsic_reward(
            OptionId::LaneChange,
            VehicleId(0),
            &obs_with_deviation(0.0),
            &events,
            0.5,
            0.5,
            &constants(),
        )
        .unwrap();
        assert_eq!(r, 20.0);
    }

    #[test]
    fn centered_idle_keep_lane_scores_zero() {
        let r = intrinsic_reward(
            OptionId::KeepLane,
            VehicleId(0),
            &obs_with_deviation(0.0),
            &events_with(0.0, false),
            0.5,
            0.5,
            &constants(),
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn mixed_deviation_and_travel() {
        // deviation = lane_width/4 -> r_deviate = -0.5; full travel -> 1.0;
        // 0.5 * (-0.5) + 0.5 * 1.0 = 0.25
        let r = intrinsic_reward(
            OptionId::SlowDown,
            VehicleId(0),
            &obs_with_deviation(0.125),
            &events_with(0.2, false),
            0.5,
            0.5,
            &constants(),
        )
        .unwrap();
        assert!((r - 0.25).abs() < 1e-12, "got {r}");
    }

    #[test]
    fn lane_change_failure_pays_minus_twenty() {
        let mut events = events_with(0.1, false);
        events.lane_change_failed.insert(VehicleId(0));
        let r = intrinsic_reward(
            OptionId::LaneChange,
            VehicleId(0),
            &obs_with_deviation(0.1),
            &events,
            0.5,
            0.5,
            &constants(),
        )
        .unwrap();
        assert_eq!(r, -20.0);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(high_reward(&events_with(0.0, false), VehicleId(0), 1.5, &constants()).is_err());
        assert!(intrinsic_reward(
            OptionId::KeepLane,
            VehicleId(0),
            &obs_with_deviation(0.0),
            &events_with(0.0, false),
            -0.1,
            0.5,
            &constants()
        )
        .is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn team_reward_within_bounds(
                alpha in 0.0f64..=1.0,
                travel in -0.5f64..0.5,
                collided in proptest::bool::ANY,
            ) {
                let r = high_reward(&events_with(travel, collided), VehicleId(0), alpha, &constants()).unwrap();
                prop_assert!(r >= -20.0 * alpha - 1e-12);
                prop_assert!(r <= (1.0 - alpha) + 1e-12);
            }

            #[test]
            fn travel_reward_unit_interval(travel in -1.0f64..1.0) {
                let r = travel_reward(&events_with(travel, false), VehicleId(0), &constants());
                prop_assert!((0.0..=1.0).contains(&r));
            }
        }
    }
}
