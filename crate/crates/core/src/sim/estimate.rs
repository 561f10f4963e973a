use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::SampleSet;
use crate::error::{Error, Result};
use crate::prob::{ConditionalTable, JointTable, Variable, VariableSpace};

/// Labels are matched numerically, so `"1"`, `"1.0"` and `1` agree.
const LABEL_TOL: f64 = 1e-9;

/// Relative frequencies of the space's variables (read from equally named
/// columns), with `smoothing` added to every cell before normalizing.
pub fn estimate_joint(sample: &SampleSet, space: &VariableSpace, smoothing: f64) -> Result<JointTable> {
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidTable("smoothing must be finite and non-negative".into()));
    }
    let mut cols = Vec::with_capacity(space.len());
    let mut labels = Vec::with_capacity(space.len());
    for v in space.variables() {
        cols.push(sample.column_index(&v.name)?);
        let parsed = v
            .range
            .iter()
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidTable(format!("label `{l}` of `{}` is not numeric", v.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        labels.push(parsed);
    }
    let mut counts = vec![smoothing; space.cardinality()];
    let mut multi = vec![0; space.len()];
    for row in sample.rows() {
        for (k, (&c, range)) in cols.iter().zip(&labels).enumerate() {
            let value = row[c];
            multi[k] = range.iter().position(|&l| (l - value).abs() <= LABEL_TOL).ok_or_else(|| Error::OutOfRange {
                column: space.variables()[k].name.clone(),
                value,
            })?;
        }
        counts[space.flat_index(&multi)] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidTable("empty sample and no smoothing".into()));
    }
    JointTable::new(space.clone(), counts.into_iter().map(|c| c / total).collect())
}

/// Bin index of `value` for ascending `edges`: bin `i` is `[e_{i-1}, e_i)`
/// with open-ended first and last bins.
pub fn bin_index(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|&e| e <= value)
}

/// `P(bin | μ_j)` for `N(μ_j, σ²)` cut at the given edges; the outer bins
/// absorb the tails, so there are `edges.len() + 1` bins. With `std = 0`
/// each column is the indicator of the bin holding `μ_j`.
///
/// Input variable `MU` (one value per mean), output variable `BIN`.
pub fn gaussian_bin_channel(means: &[f64], std: f64, edges: &[f64]) -> Result<ConditionalTable> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::InvalidTable("std must be finite and non-negative".into()));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidTable("bin edges must be finite and strictly ascending".into()));
    }
    if means.is_empty() {
        return Err(Error::EmptyRange("MU".into()));
    }
    let nb = edges.len() + 1;
    let mut m = DMatrix::zeros(nb, means.len());
    for (j, &mu) in means.iter().enumerate() {
        if std == 0.0 {
            m[(bin_index(edges, mu), j)] = 1.0;
            continue;
        }
        let normal = Normal::new(mu, std).map_err(|e| Error::InvalidTable(e.to_string()))?;
        let mut below = 0.0;
        for (i, &e) in edges.iter().enumerate() {
            let c = normal.cdf(e);
            m[(i, j)] = c - below;
            below = c;
        }
        m[(nb - 1, j)] = 1.0 - below;
        let total: f64 = m.column(j).sum();
        m.column_mut(j).unscale_mut(total);
    }
    ConditionalTable::new(
        VariableSpace::new(vec![Variable::indexed("MU", means.len())])?,
        VariableSpace::new(vec![Variable::indexed("BIN", nb)])?,
        m,
    )
}
