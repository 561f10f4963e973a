use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{kl_vectors, matrix_from_rows, matrix_to_rows, ConditionalTable, Variable, VariableSpace};

/// Action channel `π(A | O)` for some observation `O`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicyJson", into = "PolicyJson")]
pub struct Policy {
    table: ConditionalTable,
}

#[derive(Serialize, Deserialize)]
struct PolicyJson {
    observation_space: Vec<Variable>,
    action_space: Vec<Variable>,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<PolicyJson> for Policy {
    type Error = Error;

    fn try_from(raw: PolicyJson) -> Result<Self> {
        let table = ConditionalTable::new(
            VariableSpace::new(raw.observation_space)?,
            VariableSpace::new(raw.action_space)?,
            matrix_from_rows(&raw.matrix)?,
        )?;
        Ok(Policy { table })
    }
}

impl From<Policy> for PolicyJson {
    fn from(p: Policy) -> Self {
        PolicyJson {
            observation_space: p.table.space_in().clone().into(),
            action_space: p.table.space_out().clone().into(),
            matrix: matrix_to_rows(p.table.matrix()),
        }
    }
}

impl Policy {
    pub fn new(table: ConditionalTable) -> Self {
        Self { table }
    }

    pub fn from_matrix(observation: VariableSpace, action: VariableSpace, matrix: DMatrix<f64>) -> Result<Self> {
        Ok(Self { table: ConditionalTable::new(observation, action, matrix)? })
    }

    pub fn table(&self) -> &ConditionalTable {
        &self.table
    }

    pub fn into_table(self) -> ConditionalTable {
        self.table
    }

    pub fn observation_space(&self) -> &VariableSpace {
        self.table.space_in()
    }

    pub fn action_space(&self) -> &VariableSpace {
        self.table.space_out()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.table.matrix()
    }

    /// `π(a | o)` by flat indices.
    pub fn prob(&self, a: usize, o: usize) -> f64 {
        self.table.matrix()[(a, o)]
    }

    /// Same probabilities over a renamed observation space, e.g. reading a
    /// demonstrator policy over `Y_D` as a target policy over `Y_T`.
    pub fn with_observation_space(&self, observation: VariableSpace) -> Result<Self> {
        Ok(Self { table: self.table.relabel(observation, self.action_space().clone())? })
    }
}

/// `π(a | y) = P(a, y) / Σ_a' P(a', y)` from per-action vectors `P(a, Y)`.
pub fn policy_from_joint(selection: &[DVector<f64>], action: VariableSpace, observation: VariableSpace) -> Result<Policy> {
    let na = action.cardinality();
    let ny = observation.cardinality();
    if selection.len() != na || selection.iter().any(|v| v.len() != ny) {
        return Err(Error::ShapeMismatch(format!("expected {na} vectors of length {ny}")));
    }
    let mut m = DMatrix::zeros(na, ny);
    for y in 0..ny {
        let mass: f64 = selection.iter().map(|v| v[y].max(0.0)).sum();
        if mass <= 0.0 {
            return Err(Error::ZeroConditioning { cell: observation.describe(y) });
        }
        for a in 0..na {
            m[(a, y)] = selection[a][y].max(0.0) / mass;
        }
    }
    Policy::from_matrix(observation, action, m)
}

/// `Σ_o w(o) D(p(·|o) ‖ q(·|o))`.
pub fn policy_kl(p: &Policy, q: &Policy, weights: &[f64]) -> Result<f64> {
    if p.matrix().shape() != q.matrix().shape() || weights.len() != p.matrix().ncols() {
        return Err(Error::ShapeMismatch("policies or weights have different shapes".into()));
    }
    let mut total = 0.0;
    for (o, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let pc = p.table.column(o);
        let qc = q.table.column(o);
        total += w * kl_vectors(pc.as_slice(), qc.as_slice()).map_err(|_| Error::SupportViolation {
            cell: p.observation_space().describe(o),
        })?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_joint_gives_uniform_policy() {
        let a = VariableSpace::single("A", 2).unwrap();
        let y = VariableSpace::single("Y", 3).unwrap();
        let sel = vec![DVector::from_element(3, 1.0 / 6.0); 2];
        let p = policy_from_joint(&sel, a, y).unwrap();
        assert!(p.matrix().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn direct_normalization() {
        let a = VariableSpace::single("A", 2).unwrap();
        let y = VariableSpace::single("Y", 1).unwrap();
        let p = policy_from_joint(&[DVector::from_vec(vec![0.4]), DVector::from_vec(vec![0.1])], a, y).unwrap();
        assert_abs_diff_eq!(p.prob(0, 0), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn zero_column_is_reported() {
        let a = VariableSpace::single("A", 2).unwrap();
        let y = VariableSpace::single("Y", 2).unwrap();
        let err = policy_from_joint(&[DVector::from_vec(vec![0.4, 0.0]), DVector::from_vec(vec![0.1, 0.0])], a, y);
        assert!(matches!(err, Err(Error::ZeroConditioning { cell }) if cell == "Y=1"));
    }

    #[test]
    fn json_shape() {
        let p = Policy::new(ConditionalTable::from_rows("Y", "A", &[vec![0.25, 1.0], vec![0.75, 0.0]]).unwrap());
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["matrix"][0][1], 1.0);
        assert_eq!(v["observation_space"][0]["name"], "Y");
        let back: Policy = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
