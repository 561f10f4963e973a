//! Action-effect transfer: identified sets and bounds for discrete
//! `P(Z | X, A)`, the exact linear-Gaussian estimator, and the average-based
//! proxy with its gap bounds.

mod discrete;
mod linear;
mod proxy;

pub use discrete::{discrete_effect_solution_set, effect_bounds, effect_bounds_table, EffectBound, EffectSolutionSets};
pub use linear::{
    condition_number, effect_from_covariances, linear_average_proxy, linear_transfer_estimate, ols_effect, population_covariances,
    CovarianceBlocks, EffectEstimate, LinearColumns, LinearGaussianModel, CONDITION_LIMIT,
};
pub use proxy::{average_proxy, proxy_gap_bound, GapBound};
