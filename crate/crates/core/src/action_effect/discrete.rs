use serde::Serialize;

use crate::error::{Error, Result};
use crate::identify::{enumerate_solution_vertices, EnumerationOptions, IdentificationSystem, SolutionPolytope};
use crate::lp::{LinearProgram, Relation, Terms};
use crate::prob::{ConditionalTable, JointTable, Variable, VariableSpace};

/// Per-`(z, a)` solution polytopes for `P(z, a, X)`.
#[derive(Debug, Clone)]
pub struct EffectSolutionSets {
    outcome: Variable,
    action: Variable,
    state: VariableSpace,
    /// Indexed by `z * |A| + a`.
    cells: Vec<SolutionPolytope>,
}

impl EffectSolutionSets {
    pub fn outcome(&self) -> &Variable {
        &self.outcome
    }

    pub fn action(&self) -> &Variable {
        &self.action
    }

    pub fn state(&self) -> &VariableSpace {
        &self.state
    }

    pub fn get(&self, z: usize, a: usize) -> &SolutionPolytope {
        &self.cells[z * self.action.size() + a]
    }

    pub fn is_point_identified(&self) -> bool {
        self.cells.iter().all(SolutionPolytope::is_singleton)
    }
}

/// Builds and enumerates `sensor · P(z, a, X) = P(z, a, Y_S)` for every
/// outcome/action cell.
///
/// `outcome` and `action` name single variables of `joint`; the remaining
/// variables must be the sensor's output space, in the same order.
pub fn discrete_effect_solution_set(
    joint: &JointTable,
    sensor: &ConditionalTable,
    outcome: &str,
    action: &str,
    options: &EnumerationOptions,
) -> Result<EffectSolutionSets> {
    let observed = sensor.space_out().names();
    let mut order = vec![outcome, action];
    order.extend(&observed);
    if order.len() != joint.space().len() {
        return Err(Error::ShapeMismatch(format!(
            "joint has variables {:?}; expected {outcome}, {action} and the sensor outputs {:?}",
            joint.space().names(),
            observed
        )));
    }
    let arranged = joint.permute(&order)?;
    if arranged.space().subspace(&observed)? != *sensor.space_out() {
        return Err(Error::ShapeMismatch("joint and sensor disagree on the observation ranges".into()));
    }
    let z_var = arranged.space().variable(outcome)?.clone();
    let a_var = arranged.space().variable(action)?.clone();
    let m = sensor.rows();

    let mut cells = Vec::with_capacity(z_var.size() * a_var.size());
    for z in 0..z_var.size() {
        for a in 0..a_var.size() {
            let offset = (z * a_var.size() + a) * m;
            let rhs = arranged.probs()[offset..offset + m].to_vec();
            let system = IdentificationSystem::new(sensor, rhs)?;
            let polytope = enumerate_solution_vertices(&system, options).map_err(|e| match e {
                Error::Infeasible(msg) => {
                    Error::Infeasible(format!("cell ({outcome}={}, {action}={}): {msg}", z_var.range[z], a_var.range[a]))
                }
                other => other,
            })?;
            cells.push(polytope);
        }
    }

    let mass: f64 = cells.iter().map(|p| p.vertices()[0].sum()).sum();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Infeasible(format!("identified cells carry total mass {mass}, expected 1")));
    }
    Ok(EffectSolutionSets { outcome: z_var, action: a_var, state: sensor.space_in().clone(), cells })
}

/// `[lower, upper]` of `P(z | x, a)` over the identified set.
///
/// The ratio `v_z(x) / Σ_z' v_z'(x)` of linear functions of the vertex
/// weights is turned into a linear program by the Charnes–Cooper
/// substitution `y = t λ`, with the denominator fixed to one.
pub fn effect_bounds(sets: &EffectSolutionSets, z: usize, x: usize, a: usize) -> Result<(f64, f64)> {
    let nz = sets.outcome.size();
    if z >= nz || a >= sets.action.size() || x >= sets.state.cardinality() {
        return Err(Error::ShapeMismatch(format!("cell (z={z}, x={x}, a={a}) is out of range")));
    }
    let polytopes: Vec<&SolutionPolytope> = (0..nz).map(|zz| sets.get(zz, a)).collect();
    let offsets: Vec<usize> = polytopes
        .iter()
        .scan(0, |acc, p| {
            let o = *acc;
            *acc += p.vertices().len();
            Some(o)
        })
        .collect();
    let k_total: usize = polytopes.iter().map(|p| p.vertices().len()).sum();
    let term = |zz: usize| -> Terms {
        polytopes[zz].vertices().iter().enumerate().map(|(k, v)| (offsets[zz] + k, v[x])).collect()
    };
    let denominator: Terms = (0..nz).flat_map(term).collect();
    let cell = format!("{}={} | {}, {}={}", sets.outcome.name, sets.outcome.range[z], sets.state.describe(x), sets.action.name, sets.action.range[a]);

    // largest achievable denominator over the plain product of polytopes
    let mut plain = LinearProgram::nonnegative(k_total);
    for (zz, p) in polytopes.iter().enumerate() {
        let terms = (0..p.vertices().len()).map(|k| (offsets[zz] + k, 1.0)).collect();
        plain.add(terms, Relation::Eq, 1.0);
    }
    let negated: Terms = denominator.iter().map(|&(i, c)| (i, -c)).collect();
    let max_den = -plain.minimize(&negated)?.value;
    if max_den <= 1e-12 {
        return Err(Error::UndefinedConditional(cell));
    }

    let t = k_total;
    let mut lp = LinearProgram::nonnegative(k_total + 1);
    for (zz, p) in polytopes.iter().enumerate() {
        let mut terms: Terms = (0..p.vertices().len()).map(|k| (offsets[zz] + k, 1.0)).collect();
        terms.push((t, -1.0));
        lp.add(terms, Relation::Eq, 0.0);
    }
    lp.add(denominator, Relation::Eq, 1.0);
    let numerator = term(z);
    let lower = lp.minimize(&numerator)?.value;
    let upper = -lp.minimize(&numerator.iter().map(|&(i, c)| (i, -c)).collect())?.value;
    let lower = lower.clamp(0.0, 1.0);
    Ok((lower, upper.clamp(lower, 1.0)))
}

/// One row of a bounds report.
#[derive(Debug, Clone, Serialize)]
pub struct EffectBound {
    pub z: String,
    pub x: String,
    pub a: String,
    pub lower: f64,
    pub upper: f64,
}

/// Bounds for every `(z, x, a)` cell, skipping none; undefined conditionals
/// are reported as errors.
pub fn effect_bounds_table(sets: &EffectSolutionSets) -> Result<Vec<EffectBound>> {
    let mut out = Vec::new();
    for z in 0..sets.outcome.size() {
        for x in 0..sets.state.cardinality() {
            for a in 0..sets.action.size() {
                let (lower, upper) = effect_bounds(sets, z, x, a)?;
                out.push(EffectBound {
                    z: sets.outcome.range[z].clone(),
                    x: sets.state.describe(x),
                    a: sets.action.range[a].clone(),
                    lower,
                    upper,
                });
            }
        }
    }
    Ok(out)
}
