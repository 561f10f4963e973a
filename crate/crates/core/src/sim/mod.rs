//! Synthetic data for the car-following and driving-scene experiments, and
//! empirical estimation of tables from samples.

mod carfollow;
mod driving;
mod estimate;
mod sample;

pub use carfollow::{generate_carfollow, CarFollowConfig, CarFollowData, SensorSpec, SENSOR_CONDITION_LIMIT};
pub use driving::{generate_driving_scene, DrivingScene, DrivingSceneConfig, ACTIONS};
pub use estimate::{bin_index, estimate_joint, gaussian_bin_channel};
pub use sample::SampleSet;
