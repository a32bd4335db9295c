//! Deterministic kinematic multi-lane traffic simulator with observations,
//! collision events and both reward families.

mod geometry;
mod reward;
mod scenario;
mod sim;
mod trajectory;

pub use geometry::LaneGeometry;
pub use reward::{high_reward, intrinsic_reward, travel_reward};
pub use scenario::{EnvConstants, ScenarioConfig, VehicleSpec};
pub use sim::{
    collision_check, Command, EnvState, HighObservation, LowObservation, StepEvents, VehicleId,
    VehicleState,
};
pub use trajectory::{
    read_rows, write_header, write_row, TrajectoryRow, TRAJECTORY_HEADER,
};
