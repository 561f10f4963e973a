use nalgebra::DVector;

use super::policy::{policy_from_joint, Policy};
use crate::error::{Error, Result};
use crate::identify::{enumerate_solution_vertices, row_reduce_to_full_rank, EnumerationOptions, IdentificationSystem, SolutionPolytope};
use crate::lp::{LinearConstraint, LinearProgram, Relation, Terms};
use crate::prob::{ConditionalTable, JointTable, VariableSpace};

#[derive(Debug, Clone, Default)]
pub struct PolicyIdentifyOptions {
    pub enumeration: EnumerationOptions,
    /// Replace each `P(a, Y_S)` by the nearest right-hand side (in L1) that
    /// the channel can produce before enumerating. Needed for empirical
    /// tables when the channel is rank deficient.
    pub project: bool,
}

/// Per-action polytopes of feasible `P_S(a, Y_D)` vectors.
#[derive(Debug, Clone)]
pub struct PolicySolutionSets {
    action: VariableSpace,
    observation: VariableSpace,
    cells: Vec<SolutionPolytope>,
    /// Total L1 change made to the right-hand sides by projection.
    pub projection_l1: f64,
}

impl PolicySolutionSets {
    pub fn action_space(&self) -> &VariableSpace {
        &self.action
    }

    pub fn observation_space(&self) -> &VariableSpace {
        &self.observation
    }

    pub fn get(&self, a: usize) -> &SolutionPolytope {
        &self.cells[a]
    }

    pub fn cells(&self) -> &[SolutionPolytope] {
        &self.cells
    }

    pub fn is_point_identified(&self) -> bool {
        self.cells.iter().all(SolutionPolytope::is_singleton)
    }
}

/// Solves `P_S(a, Y_S) = channel · P_S(a, Y_D)` for every action.
///
/// The joint's variables other than the channel outputs are the actions.
pub fn exact_policy_solution_set(
    p_ays: &JointTable,
    channel: &ConditionalTable,
    options: &PolicyIdentifyOptions,
) -> Result<PolicySolutionSets> {
    let obs = channel.space_out().names();
    let actions: Vec<&str> = p_ays.space().names().into_iter().filter(|n| !obs.contains(n)).collect();
    if actions.is_empty() || actions.len() + obs.len() != p_ays.space().len() {
        return Err(Error::ShapeMismatch(format!(
            "joint over {:?} must hold actions plus the channel outputs {:?}",
            p_ays.space().names(),
            obs
        )));
    }
    let mut order = actions.clone();
    order.extend(&obs);
    let arranged = p_ays.permute(&order)?;
    if arranged.space().subspace(&obs)? != *channel.space_out() {
        return Err(Error::ShapeMismatch("joint and channel disagree on observation ranges".into()));
    }
    let action = arranged.space().subspace(&actions)?;
    let m = channel.rows();
    let mut cells = Vec::with_capacity(action.cardinality());
    let mut projection_l1 = 0.0;
    for a in 0..action.cardinality() {
        let rhs = arranged.probs()[a * m..(a + 1) * m].to_vec();
        let mut system = IdentificationSystem::new(channel, rhs)?;
        if options.project {
            let (projected, dist) = system.project_to_feasible()?;
            system = projected;
            projection_l1 += dist;
        }
        let polytope = enumerate_solution_vertices(&system, &options.enumeration).map_err(|e| match e {
            Error::Infeasible(msg) => Error::Infeasible(format!("action {}: {msg}", action.describe(a))),
            other => other,
        })?;
        cells.push(polytope);
    }
    Ok(PolicySolutionSets { action, observation: channel.space_in().clone(), cells, projection_l1 })
}

/// Selection criteria layered on top of the hard constraints.
#[derive(Debug, Clone, Default)]
pub struct SelectionOptions {
    /// Known `P_S(Y_D)`; when given, the L1 mismatch `Σ_y |Σ_a P(a,y) − P(y)|`
    /// is minimized first.
    pub observation_marginal: Option<Vec<f64>>,
    /// Reference policy (typically the case-1 proxy); the total deviation
    /// `Σ_{a,y} |P(a,y) − π_ref(a|y) Σ_a' P(a',y)|` is minimized next.
    pub reference: Option<Policy>,
}

/// Feasible stacked `P_S(a, Y_D)` (index `a · |Y_D| + y`) in the product of
/// the per-action polytopes, subject to `constraints`, chosen by the criteria
/// in `options` applied lexicographically.
pub fn select_joint_lp(
    sets: &PolicySolutionSets,
    constraints: &[LinearConstraint],
    options: &SelectionOptions,
) -> Result<Vec<DVector<f64>>> {
    let na = sets.action.cardinality();
    let ny = sets.observation.cardinality();
    if sets.cells.iter().any(|p| p.vertices().is_empty()) {
        return Err(Error::Infeasible("empty polytope".into()));
    }
    // Work directly in P(a, y) coordinates under each cell's equality
    // system; the vertex-weight form is badly degenerate for product-shaped
    // polytopes.
    let entry = |a: usize, y: usize| -> Terms { vec![(a * ny + y, 1.0)] };
    let mut lp = LinearProgram::nonnegative(na * ny);
    for (a, p) in sets.cells.iter().enumerate() {
        let reduced = row_reduce_to_full_rank(p.system())?;
        for (r, row) in reduced.matrix().row_iter().enumerate() {
            let terms = row.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(y, &v)| (a * ny + y, v)).collect();
            lp.add(terms, Relation::Eq, reduced.rhs()[r]);
        }
    }
    for c in constraints {
        if c.coeffs.len() != na * ny {
            return Err(Error::ShapeMismatch(format!("constraint has {} coefficients, expected {}", c.coeffs.len(), na * ny)));
        }
        let mut terms = Terms::new();
        for (i, &coef) in c.coeffs.iter().enumerate() {
            if coef != 0.0 {
                terms.extend(entry(i / ny, i % ny).into_iter().map(|(j, v)| (j, coef * v)));
            }
        }
        lp.add(terms, c.relation, c.rhs);
    }

    let mut stages: Vec<Terms> = Vec::new();
    if let Some(marginal) = &options.observation_marginal {
        if marginal.len() != ny {
            return Err(Error::ShapeMismatch("observation marginal has the wrong length".into()));
        }
        let mut objective = Terms::new();
        for (y, &target) in marginal.iter().enumerate() {
            let (up, down) = (lp.add_var(0.0, f64::INFINITY), lp.add_var(0.0, f64::INFINITY));
            let mut terms: Terms = (0..na).flat_map(|a| entry(a, y)).collect();
            terms.push((up, -1.0));
            terms.push((down, 1.0));
            lp.add(terms, Relation::Eq, target);
            objective.push((up, 1.0));
            objective.push((down, 1.0));
        }
        stages.push(objective);
    }
    if let Some(reference) = &options.reference {
        if reference.matrix().shape() != (na, ny) {
            return Err(Error::ShapeMismatch("reference policy has the wrong shape".into()));
        }
        let mut objective = Terms::new();
        for a in 0..na {
            for y in 0..ny {
                let (up, down) = (lp.add_var(0.0, f64::INFINITY), lp.add_var(0.0, f64::INFINITY));
                let mut terms = entry(a, y);
                let r = reference.prob(a, y);
                for b in 0..na {
                    terms.extend(entry(b, y).into_iter().map(|(j, v)| (j, -r * v)));
                }
                terms.push((up, -1.0));
                terms.push((down, 1.0));
                lp.add(terms, Relation::Eq, 0.0);
                objective.push((up, 1.0));
                objective.push((down, 1.0));
            }
        }
        stages.push(objective);
    }

    let solution = if stages.is_empty() { lp.minimize(&Terms::new()) } else { lp.minimize_lexicographic(&stages) }
        .map_err(|e| match e {
            Error::Infeasible(_) => Error::Infeasible("policy constraints are infeasible over the identified set".into()),
            other => other,
        })?;
    Ok((0..na).map(|a| DVector::from_fn(ny, |y, _| solution.x[a * ny + y].max(0.0))).collect())
}

/// [`select_joint_lp`] followed by normalization into `π(A | Y_D)`.
pub fn select_policy_lp(
    sets: &PolicySolutionSets,
    constraints: &[LinearConstraint],
    options: &SelectionOptions,
) -> Result<Policy> {
    let joint = select_joint_lp(sets, constraints, options)?;
    policy_from_joint(&joint, sets.action.clone(), sets.observation.clone())
}

/// Row forcing `π(a | y) = 0`, i.e. `P(a, y) = 0`, over stacked entries.
pub fn forbid_action(sets: &PolicySolutionSets, a: usize, y: usize) -> LinearConstraint {
    let ny = sets.observation.cardinality();
    let mut coeffs = vec![0.0; sets.action.cardinality() * ny];
    coeffs[a * ny + y] = 1.0;
    LinearConstraint::eq(coeffs, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Variable, ZeroHandling};
    use approx::assert_abs_diff_eq;

    fn ay(na: usize, ny: usize, probs: Vec<f64>) -> JointTable {
        JointTable::new(VariableSpace::new(vec![Variable::indexed("A", na), Variable::indexed("YS", ny)]).unwrap(), probs).unwrap()
    }

    #[test]
    fn identity_channel_is_point_identified() {
        let j = ay(2, 2, vec![0.1, 0.2, 0.3, 0.4]);
        let channel = ConditionalTable::identity(VariableSpace::single("YD", 2).unwrap(), VariableSpace::single("YS", 2).unwrap()).unwrap();
        let sets = exact_policy_solution_set(&j, &channel, &Default::default()).unwrap();
        assert!(sets.is_point_identified());
        assert_eq!(sets.get(1).vertices()[0].as_slice(), &[0.3, 0.4]);
        let pi = select_policy_lp(&sets, &[], &Default::default()).unwrap();
        let direct = j.condition(&["YS"], ZeroHandling::Error).unwrap();
        assert_eq!(pi.matrix(), direct.matrix());
    }

    #[test]
    fn constant_observation_gives_segments() {
        let j = ay(2, 1, vec![0.5, 0.5]);
        let channel = ConditionalTable::from_rows("YD", "YS", &[vec![1.0, 1.0]]).unwrap();
        let sets = exact_policy_solution_set(&j, &channel, &Default::default()).unwrap();
        for a in 0..2 {
            let v = sets.get(a).vertices();
            assert_eq!(v.len(), 2);
            assert_eq!(v[0].as_slice(), &[0.5, 0.0]);
            assert_eq!(v[1].as_slice(), &[0.0, 0.5]);
        }
    }

    #[test]
    fn pinning_constraint_selects_unique_point() {
        let j = ay(2, 1, vec![0.4, 0.6]);
        let channel = ConditionalTable::from_rows("YD", "YS", &[vec![1.0, 1.0]]).unwrap();
        let sets = exact_policy_solution_set(&j, &channel, &Default::default()).unwrap();
        // P(a0, y0) = 0.1 and P(a1, y0) = 0.3
        let pins = [LinearConstraint::eq(vec![1.0, 0.0, 0.0, 0.0], 0.1), LinearConstraint::eq(vec![0.0, 0.0, 1.0, 0.0], 0.3)];
        let joint = select_joint_lp(&sets, &pins, &Default::default()).unwrap();
        assert_abs_diff_eq!(joint[0][0], 0.1, epsilon = 1e-9);
        assert_abs_diff_eq!(joint[0][1], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(joint[1][0], 0.3, epsilon = 1e-9);
        assert_abs_diff_eq!(joint[1][1], 0.3, epsilon = 1e-9);
        let pi = select_policy_lp(&sets, &pins, &Default::default()).unwrap();
        assert_abs_diff_eq!(pi.prob(0, 0), 0.25, epsilon = 1e-9);
    }

    #[test]
    fn forbidden_actions_hold_exactly() {
        let j = ay(2, 1, vec![0.5, 0.5]);
        let channel = ConditionalTable::from_rows("YD", "YS", &[vec![1.0, 1.0]]).unwrap();
        let sets = exact_policy_solution_set(&j, &channel, &Default::default()).unwrap();
        let rows = [forbid_action(&sets, 0, 1), forbid_action(&sets, 1, 0)];
        let pi = select_policy_lp(&sets, &rows, &Default::default()).unwrap();
        assert_eq!(pi.prob(0, 1), 0.0);
        assert_eq!(pi.prob(1, 0), 0.0);
    }

    #[test]
    fn marginal_and_reference_stages() {
        let j = ay(2, 1, vec![0.5, 0.5]);
        let channel = ConditionalTable::from_rows("YD", "YS", &[vec![1.0, 1.0]]).unwrap();
        let sets = exact_policy_solution_set(&j, &channel, &Default::default()).unwrap();
        let reference = Policy::new(ConditionalTable::from_rows("YD", "A", &[vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap());
        let options = SelectionOptions { observation_marginal: Some(vec![0.5, 0.5]), reference: Some(reference) };
        let pi = select_policy_lp(&sets, &[], &options).unwrap();
        assert_abs_diff_eq!(pi.prob(0, 0), 0.8, epsilon = 1e-8);
        assert_abs_diff_eq!(pi.prob(0, 1), 0.2, epsilon = 1e-8);
    }

    #[test]
    fn infeasible_constraints() {
        let j = ay(2, 1, vec![0.5, 0.5]);
        let channel = ConditionalTable::from_rows("YD", "YS", &[vec![1.0, 1.0]]).unwrap();
        let sets = exact_policy_solution_set(&j, &channel, &Default::default()).unwrap();
        let bad = [LinearConstraint::ge(vec![1.0, 0.0, 0.0, 0.0], 0.6)];
        assert!(matches!(select_policy_lp(&sets, &bad, &Default::default()), Err(Error::Infeasible(_))));
    }
}
