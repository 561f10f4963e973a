use serde::{Deserialize, Serialize};

use super::conditional::ConditionalTable;
use super::space::{Variable, VariableSpace};
use super::{NORMALIZATION_TOL, ZeroHandling};
use crate::error::{Error, Result};

/// Dense joint probability tensor over a [`VariableSpace`], stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointTableJson", into = "JointTableJson")]
pub struct JointTable {
    space: VariableSpace,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointTableJson {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

impl TryFrom<JointTableJson> for JointTable {
    type Error = Error;

    fn try_from(raw: JointTableJson) -> Result<Self> {
        JointTable::new(VariableSpace::new(raw.variables)?, raw.probs)
    }
}

impl From<JointTable> for JointTableJson {
    fn from(table: JointTable) -> Self {
        JointTableJson { variables: table.space.into(), probs: table.probs }
    }
}

impl JointTable {
    /// Normalized joint distribution: entries non-negative, summing to one.
    pub fn new(space: VariableSpace, probs: Vec<f64>) -> Result<Self> {
        let table = Self::sub_probability(space, probs)?;
        let total = table.total();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidTable(format!("entries sum to {total}, expected 1")));
        }
        Ok(table)
    }

    /// Sub-probability table (total mass at most one), e.g. a slice `P(z, a, Y)`.
    pub fn sub_probability(space: VariableSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.cardinality() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a space of {} cells",
                probs.len(),
                space.cardinality()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidTable(format!(
                "entry {} = {} at {}",
                i,
                probs[i],
                space.describe(i)
            )));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + NORMALIZATION_TOL {
            return Err(Error::InvalidTable(format!("entries sum to {total} > 1")));
        }
        Ok(Self { space, probs })
    }

    pub fn from_fn(space: VariableSpace, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let probs = (0..space.cardinality()).map(|i| f(&space.multi_index(i))).collect();
        Self::new(space, probs)
    }

    pub fn uniform(space: VariableSpace) -> Self {
        let n = space.cardinality();
        Self { probs: vec![1.0 / n as f64; n], space }
    }

    /// Normalizes arbitrary non-negative weights into a joint table.
    pub fn from_weights(space: VariableSpace, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidTable("weights have zero total mass".into()));
        }
        Self::new(space, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn space(&self) -> &VariableSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, multi: &[usize]) -> f64 {
        self.probs[self.space.flat_index(multi)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums out every variable not in `keep`. The result keeps the original
    /// variable order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointTable> {
        let positions = self.kept_positions(keep)?;
        let names: Vec<&str> = positions
            .iter()
            .map(|&p| self.space.variables()[p].name.as_str())
            .collect();
        let target = self.space.subspace(&names)?;
        let mut probs = vec![0.0; target.cardinality()];
        let mut sub = vec![0usize; positions.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let multi = self.space.multi_index(flat);
            for (slot, &pos) in sub.iter_mut().zip(&positions) {
                *slot = multi[pos];
            }
            probs[target.flat_index(&sub)] += p;
        }
        Ok(JointTable { space: target, probs })
    }

    /// Reorders axes to the given variable order (which must be a permutation).
    pub fn permute(&self, order: &[&str]) -> Result<JointTable> {
        if order.len() != self.space.len() {
            return Err(Error::ShapeMismatch(format!(
                "permutation of {} variables given {} names",
                self.space.len(),
                order.len()
            )));
        }
        let target = self.space.subspace(order)?;
        let positions: Vec<usize> =
            order.iter().map(|n| self.space.position(n)).collect::<Result<_>>()?;
        let mut probs = vec![0.0; self.probs.len()];
        let mut sub = vec![0usize; order.len()];
        for (flat, &p) in self.probs.iter().enumerate() {
            let multi = self.space.multi_index(flat);
            for (slot, &pos) in sub.iter_mut().zip(&positions) {
                *slot = multi[pos];
            }
            probs[target.flat_index(&sub)] = p;
        }
        Ok(JointTable { space: target, probs })
    }

    /// `P(rest | given)`, with output variables in original order.
    pub fn condition(&self, given: &[&str], zeros: ZeroHandling) -> Result<ConditionalTable> {
        let given_pos = self.kept_positions(given)?;
        let given_names: Vec<&str> = given_pos
            .iter()
            .map(|&p| self.space.variables()[p].name.as_str())
            .collect();
        let rest_names: Vec<&str> = self
            .space
            .names()
            .into_iter()
            .filter(|n| !given_names.contains(n))
            .collect();
        let space_in = self.space.subspace(&given_names)?;
        let space_out = self.space.subspace(&rest_names)?;
        let mut order = rest_names.clone();
        order.extend(&given_names);
        let arranged = self.permute(&order)?;
        let rows = space_out.cardinality();
        let cols = space_in.cardinality();
        // arranged is row-major over (rest, given): entry (r, c) at r * cols + c
        let mut matrix = nalgebra::DMatrix::zeros(rows, cols);
        for c in 0..cols {
            let mass: f64 = (0..rows).map(|r| arranged.probs[r * cols + c]).sum();
            if mass <= 0.0 {
                match zeros {
                    ZeroHandling::Error => {
                        return Err(Error::ZeroConditioning { cell: space_in.describe(c) })
                    }
                    ZeroHandling::UniformFill => {
                        for r in 0..rows {
                            matrix[(r, c)] = 1.0 / rows as f64;
                        }
                    }
                }
            } else {
                for r in 0..rows {
                    matrix[(r, c)] = arranged.probs[r * cols + c] / mass;
                }
            }
        }
        ConditionalTable::new(space_in, space_out, matrix)
    }

    /// Shannon entropy (nats) of the marginal over `vars`.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        let m = self.marginalize(vars)?;
        Ok(super::info::entropy_of(&m.probs))
    }

    fn kept_positions(&self, keep: &[&str]) -> Result<Vec<usize>> {
        let mut positions = keep
            .iter()
            .map(|n| self.space.position(n))
            .collect::<Result<Vec<_>>>()?;
        positions.sort_unstable();
        for w in positions.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateVariable(
                    self.space.variables()[w[0]].name.clone(),
                ));
            }
        }
        Ok(positions)
    }
}
