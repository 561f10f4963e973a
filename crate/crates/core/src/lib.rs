//! Causal transfer of action-effects and demonstrator policies when the
//! demonstrator, the spectator recording it, and the target agent observe the
//! world through different sensors.
//!
//! * [`prob`]: discrete tables, channels, KL divergence and (conditional)
//!   mutual information.
//! * [`identify`]: feasible sets of the under-determined linear system that
//!   links spectator observations to hidden-state distributions.
//! * [`action_effect`]: exact discrete solution sets and bounds, the exact
//!   linear-Gaussian estimator, and the average-based proxy.
//! * [`imitation`]: exact and proxy demonstrator-policy recovery and the
//!   behavioral KL objective.
//! * [`sim`]: data generators for the car-following and driving-scene
//!   experiments, plus empirical estimation.

pub mod action_effect;
pub mod audit;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod identify;
pub mod imitation;
mod lp;
pub mod prob;
pub mod sim;

pub use error::{Error, Result};
pub use lp::{LinearConstraint, Relation};
