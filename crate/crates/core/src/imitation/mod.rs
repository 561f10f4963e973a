//! Demonstrator-policy recovery under sensor shift: the exact identified
//! set with an LP-based selection, the three proxy policies with their
//! bounds, and the behavioral KL between target and demonstrator.

mod exact;
mod policy;
mod proxy;
mod world;

pub use exact::{
    exact_policy_solution_set, forbid_action, select_joint_lp, select_policy_lp, PolicyIdentifyOptions,
    PolicySolutionSets, SelectionOptions,
};
pub use policy::{policy_from_joint, policy_kl, Policy};
pub use proxy::{bound_case1, bound_case2, proxy_case1, proxy_case2, proxy_case3, Case1Bound};
pub use world::{behavior_kl, induced_behavior, Domain, WorldModel};
