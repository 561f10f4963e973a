//! Small dense front-end over `microlp`.

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `coeffs · x  (<= | >= | =)  rhs` over a caller-defined coordinate system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self { coeffs, relation, rhs }
    }

    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.relation {
            Relation::Le => lhs <= self.rhs + tol,
            Relation::Ge => lhs >= self.rhs - tol,
            Relation::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

pub(crate) type Terms = Vec<(usize, f64)>;

/// Relative slack used when an optimal objective value is frozen as a
/// constraint for the next lexicographic stage.
const STAGE_SLACKS: [f64; 3] = [1e-9, 1e-7, 1e-5];
/// Constraint coefficients at or below this magnitude are dropped.
const COEF_TOL: f64 = 1e-14;
/// Feasibility tolerance for constraints whose coefficients are all zero.
const EMPTY_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    bounds: Vec<(f64, f64)>,
    constraints: Vec<(Terms, Relation, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl LinearProgram {
    /// Program with `n` variables bounded below by zero.
    pub fn nonnegative(n: usize) -> Self {
        Self { bounds: vec![(0.0, f64::INFINITY); n], constraints: Vec::new() }
    }

    pub fn add_var(&mut self, lower: f64, upper: f64) -> usize {
        self.bounds.push((lower, upper));
        self.bounds.len() - 1
    }

    pub fn add(&mut self, terms: Terms, relation: Relation, rhs: f64) {
        self.constraints.push((terms, relation, rhs));
    }

    pub fn add_dense(&mut self, offset: usize, coeffs: &[f64], relation: Relation, rhs: f64) {
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, &c)| (offset + i, c))
            .collect();
        self.add(terms, relation, rhs);
    }

    pub fn minimize(&self, objective: &Terms) -> Result<LpSolution> {
        let mut dense = vec![0.0; self.bounds.len()];
        for &(i, c) in objective {
            dense[i] += c;
        }
        let mut bounds = self.bounds.clone();
        let mut rows = Vec::with_capacity(self.constraints.len());
        for (terms, relation, rhs) in &self.constraints {
            let mut merged = std::collections::BTreeMap::new();
            for &(i, c) in terms {
                *merged.entry(i).or_insert(0.0) += c;
            }
            // negligible coefficients (e.g. far Gaussian tails) derail the
            // solver's factorization
            merged.retain(|_, c: &mut f64| c.abs() > COEF_TOL);
            match merged.len() {
                0 => {
                    let holds = match relation {
                        Relation::Le => 0.0 <= *rhs + EMPTY_ROW_TOL,
                        Relation::Ge => 0.0 >= *rhs - EMPTY_ROW_TOL,
                        Relation::Eq => rhs.abs() <= EMPTY_ROW_TOL,
                    };
                    if !holds {
                        return Err(Error::Infeasible(format!("constraint 0 {relation:?} {rhs} cannot hold")));
                    }
                }
                // single-variable rows become bounds, which keeps the basis
                // better conditioned
                1 => {
                    let (&i, &c) = merged.iter().next().expect("one entry");
                    let v = rhs / c;
                    let (lo, hi) = &mut bounds[i];
                    let (upper, lower) = match relation {
                        Relation::Eq => (true, true),
                        Relation::Le => (c > 0.0, c < 0.0),
                        Relation::Ge => (c < 0.0, c > 0.0),
                    };
                    if upper {
                        *hi = hi.min(v);
                    }
                    if lower {
                        *lo = lo.max(v);
                    }
                    if *lo > *hi {
                        if *lo - *hi > EMPTY_ROW_TOL * (1.0 + lo.abs()) {
                            return Err(Error::Infeasible(format!("bounds on variable {i} cross")));
                        }
                        *hi = *lo;
                    }
                }
                _ => rows.push((merged, *relation, *rhs)),
            }
        }
        let mut problem = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = bounds.iter().zip(&dense).map(|(&b, &c)| problem.add_var(c, b)).collect();
        for (merged, relation, rhs) in rows {
            let scale = merged.values().fold(0.0f64, |m, c| m.max(c.abs()));
            let mut expr = LinearExpr::empty();
            for (i, c) in merged {
                expr.add(vars[i], c / scale);
            }
            let op = match relation {
                Relation::Le => ComparisonOp::Le,
                Relation::Ge => ComparisonOp::Ge,
                Relation::Eq => ComparisonOp::Eq,
            };
            problem.add_constraint(expr, op, rhs / scale);
        }
        let outcome = problem.solve().map_err(|e| match e {
            microlp::Error::Infeasible => Error::Infeasible("linear constraints admit no solution".into()),
            other => Error::Lp(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| Error::Lp("solve interrupted".into()))?;
        let x: Vec<f64> = vars
            .iter()
            .zip(&bounds)
            .map(|(&v, &(lo, hi))| solution.var_value(v).clamp(lo, hi))
            .collect();
        let value = objective.iter().map(|&(i, c)| c * x[i]).sum();
        Ok(LpSolution { value, x })
    }

    /// Minimizes each objective in turn, freezing earlier optima (up to a
    /// small relative slack) before moving to the next one. The slack is
    /// widened when the solver rejects the frozen stage as infeasible.
    pub fn minimize_lexicographic(&self, objectives: &[Terms]) -> Result<LpSolution> {
        let mut staged = self.clone();
        let mut last: Option<((Terms, f64), LpSolution)> = None;
        for objective in objectives {
            let sol = match &last {
                None => staged.minimize(objective)?,
                Some((frozen, previous)) => {
                    let mut result = Err(Error::Infeasible("no stage attempted".into()));
                    for &slack in &STAGE_SLACKS {
                        let mut attempt: LinearProgram = staged.clone();
                        let (terms, value): &(Terms, f64) = frozen;
                        attempt.add(terms.clone(), Relation::Le, value + slack * (1.0 + value.abs()));
                        result = attempt.minimize(objective).map(|s| (attempt, s));
                        if result.is_ok() {
                            break;
                        }
                    }
                    match result {
                        Ok((attempt, s)) => {
                            staged = attempt;
                            s
                        }
                        // keep the earlier optimum when later stages cannot be solved
                        Err(Error::Lp(_)) | Err(Error::Infeasible(_)) => return Ok(previous.clone()),
                        Err(e) => return Err(e),
                    }
                }
            };
            last = Some(((objective.clone(), sol.value), sol));
        }
        match last {
            Some((_, sol)) => Ok(sol),
            None => staged.minimize(&Vec::new()),
        }
    }
}
