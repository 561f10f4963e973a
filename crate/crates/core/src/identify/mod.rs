//! Feasible sets of the linear identification system `sensor · v = rhs`,
//! `v ≥ 0`, that links an observed sub-probability vector to the unknown
//! distribution over hidden states.

mod enumerate;
mod polytope;
mod system;

pub use enumerate::{enumerate_solution_vertices, EnumerationOptions, DEDUP_TOL, DET_TOL, NONNEG_TOL};
pub use polytope::{polytope_contains, select_point_lp, PolytopeJson, SolutionPolytope};
pub use system::{row_reduce_to_full_rank, IdentificationSystem, SystemJson, CONSISTENCY_TOL, RANK_TOL};
