use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::system::IdentificationSystem;
use crate::error::{Error, Result};
use crate::lp::{LinearConstraint, LinearProgram, Relation, Terms};

/// Finite vertex list whose convex hull is the feasible set of an
/// [`IdentificationSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPolytope {
    system: IdentificationSystem,
    vertices: Vec<DVector<f64>>,
}

/// On-disk form of a polytope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub dimension: usize,
    pub vertices: Vec<Vec<f64>>,
    pub residual_max: f64,
}

impl SolutionPolytope {
    pub(crate) fn new(system: IdentificationSystem, vertices: Vec<DVector<f64>>) -> Self {
        Self { system, vertices }
    }

    pub fn dimension(&self) -> usize {
        self.system.dimension()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn system(&self) -> &IdentificationSystem {
        &self.system
    }

    pub fn is_singleton(&self) -> bool {
        self.vertices.len() == 1
    }

    /// Largest ∞-norm residual of any vertex against the originating system.
    pub fn residual_max(&self) -> f64 {
        self.vertices.iter().map(|v| self.system.residual(v)).fold(0.0, f64::max)
    }

    /// `Σ λᵢ ζᵢ` for convex weights `λ`.
    pub fn combine(&self, weights: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dimension());
        for (w, v) in weights.iter().zip(&self.vertices) {
            out.axpy(*w, v, 1.0);
        }
        out
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson {
            dimension: self.dimension(),
            vertices: self.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
            residual_max: self.residual_max(),
        }
    }

    /// `(min, max)` of coordinate `index` over the polytope.
    pub fn coordinate_range(&self, index: usize) -> (f64, f64) {
        self.vertices.iter().map(|v| v[index]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        })
    }

    /// Convex-weight LP skeleton: `λ ≥ 0`, `Σλ = 1`, variables `0..k`.
    fn weight_program(&self) -> LinearProgram {
        let k = self.vertices.len();
        let mut lp = LinearProgram::nonnegative(k);
        lp.add((0..k).map(|i| (i, 1.0)).collect(), Relation::Eq, 1.0);
        lp
    }

    /// Coefficients of `c · x` in vertex-weight coordinates.
    fn in_weights(&self, c: &[f64]) -> Vec<f64> {
        self.vertices.iter().map(|v| v.iter().zip(c).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Whether `point` lies within `tol` (∞-norm) of the convex hull of the
/// vertices, decided by a feasibility LP over convex weights.
pub fn polytope_contains(p: &SolutionPolytope, point: &DVector<f64>, tol: f64) -> bool {
    if p.vertices.is_empty() || point.len() != p.dimension() {
        return false;
    }
    let mut lp = p.weight_program();
    for i in 0..p.dimension() {
        let coeffs: Vec<f64> = p.vertices.iter().map(|v| v[i]).collect();
        lp.add_dense(0, &coeffs, Relation::Le, point[i] + tol);
        lp.add_dense(0, &coeffs, Relation::Ge, point[i] - tol);
    }
    lp.minimize(&Vec::new()).is_ok()
}

/// Minimizes `objective · x` over the polytope intersected with `extra`.
///
/// Ties are broken towards weight on earlier vertices: after the objective,
/// the weight of vertex 0 is maximized, then vertex 1, and so on.
pub fn select_point_lp(
    p: &SolutionPolytope,
    objective: &[f64],
    extra: &[LinearConstraint],
) -> Result<DVector<f64>> {
    if p.vertices.is_empty() {
        return Err(Error::Infeasible("empty polytope".into()));
    }
    if objective.len() != p.dimension() {
        return Err(Error::ShapeMismatch("objective length differs from polytope dimension".into()));
    }
    let k = p.vertices.len();
    let mut lp = p.weight_program();
    for c in extra {
        if c.coeffs.len() != p.dimension() {
            return Err(Error::ShapeMismatch("constraint length differs from polytope dimension".into()));
        }
        lp.add_dense(0, &p.in_weights(&c.coeffs), c.relation, c.rhs);
    }
    let mut stages: Vec<Terms> = vec![p.in_weights(objective).into_iter().enumerate().collect()];
    stages.extend((0..k.saturating_sub(1)).map(|i| vec![(i, -1.0)]));
    let sol = lp.minimize_lexicographic(&stages).map_err(|e| match e {
        Error::Infeasible(_) => Error::Infeasible("extra constraints are infeasible over the polytope".into()),
        other => other,
    })?;
    Ok(p.combine(&sol.x))
}
