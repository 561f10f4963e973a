use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named discrete variable with an ordered, finite range of labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub range: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, range: Vec<String>) -> Self {
        Self { name: name.into(), range }
    }

    /// Variable whose labels are `0..size`.
    pub fn indexed(name: impl Into<String>, size: usize) -> Self {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.range.len()
    }
}

/// Ordered list of variables. Flat indices are row-major: the first variable
/// varies slowest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Variable>", into = "Vec<Variable>")]
pub struct VariableSpace {
    variables: Vec<Variable>,
    label_index: Vec<HashMap<String, usize>>,
}

impl PartialEq for VariableSpace {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables
    }
}

impl Eq for VariableSpace {}

impl TryFrom<Vec<Variable>> for VariableSpace {
    type Error = Error;

    fn try_from(variables: Vec<Variable>) -> Result<Self> {
        Self::new(variables)
    }
}

impl From<VariableSpace> for Vec<Variable> {
    fn from(space: VariableSpace) -> Self {
        space.variables
    }
}

impl VariableSpace {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        let mut label_index = Vec::with_capacity(variables.len());
        for (i, var) in variables.iter().enumerate() {
            if variables[..i].iter().any(|v| v.name == var.name) {
                return Err(Error::DuplicateVariable(var.name.clone()));
            }
            if var.range.is_empty() {
                return Err(Error::EmptyRange(var.name.clone()));
            }
            let mut map = HashMap::with_capacity(var.range.len());
            for (j, label) in var.range.iter().enumerate() {
                if map.insert(label.clone(), j).is_some() {
                    return Err(Error::InvalidTable(format!(
                        "duplicate label `{label}` in variable `{}`",
                        var.name
                    )));
                }
            }
            label_index.push(map);
        }
        Ok(Self { variables, label_index })
    }

    /// The zero-variable space, with exactly one (empty) configuration.
    pub fn empty() -> Self {
        Self { variables: Vec::new(), label_index: Vec::new() }
    }

    /// Single variable with labels `0..size`.
    pub fn single(name: impl Into<String>, size: usize) -> Result<Self> {
        Self::new(vec![Variable::indexed(name, size)])
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.variables.iter().map(Variable::size).collect()
    }

    /// Number of joint configurations.
    pub fn cardinality(&self) -> usize {
        self.variables.iter().map(Variable::size).product()
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.variables[self.position(name)?])
    }

    pub fn label_to_index(&self, var: usize, label: &str) -> Option<usize> {
        self.label_index.get(var)?.get(label).copied()
    }

    pub fn index_to_label(&self, var: usize, index: usize) -> Option<&str> {
        self.variables.get(var)?.range.get(index).map(String::as_str)
    }

    /// Row-major flat index of a multi-index.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.variables.len());
        multi
            .iter()
            .zip(&self.variables)
            .fold(0, |acc, (&i, v)| acc * v.size() + i)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.variables.len()];
        for (slot, v) in out.iter_mut().zip(&self.variables).rev() {
            *slot = flat % v.size();
            flat /= v.size();
        }
        out
    }

    /// Human-readable rendering of a configuration, e.g. `A=a1,B=b0`.
    pub fn describe(&self, flat: usize) -> String {
        let multi = self.multi_index(flat);
        if multi.is_empty() {
            return "()".to_string();
        }
        multi
            .iter()
            .zip(&self.variables)
            .map(|(&i, v)| format!("{}={}", v.name, v.range[i]))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Sub-space of the named variables, in the order given.
    pub fn subspace(&self, names: &[&str]) -> Result<Self> {
        let vars = names
            .iter()
            .map(|n| self.variable(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars)
    }

    /// Concatenation of two spaces with disjoint variable names.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut vars = self.variables.clone();
        vars.extend(other.variables.iter().cloned());
        Self::new(vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_maps_are_inverse() {
        let space = VariableSpace::new(vec![
            Variable::indexed("A", 2),
            Variable::indexed("B", 3),
            Variable::indexed("C", 4),
        ])
        .unwrap();
        for flat in 0..space.cardinality() {
            assert_eq!(space.flat_index(&space.multi_index(flat)), flat);
        }
        assert_eq!(space.flat_index(&[1, 2, 3]), 23);
        assert_eq!(space.label_to_index(1, "2"), Some(2));
        assert_eq!(space.index_to_label(2, 3), Some("3"));
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(matches!(
            VariableSpace::new(vec![Variable::indexed("A", 2), Variable::indexed("A", 2)]),
            Err(Error::DuplicateVariable(_))
        ));
        assert!(matches!(
            VariableSpace::new(vec![Variable::new("A", vec![])]),
            Err(Error::EmptyRange(_))
        ));
    }

    #[test]
    fn empty_space_has_one_configuration() {
        assert_eq!(VariableSpace::empty().cardinality(), 1);
        assert_eq!(VariableSpace::empty().flat_index(&[]), 0);
    }
}
