use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::joint::JointTable;
use super::space::{Variable, VariableSpace};
use super::NORMALIZATION_TOL;
use crate::error::{Error, Result};

/// Column-stochastic channel `P(out | in)`: rows index output configurations,
/// columns index input configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConditionalJson", into = "ConditionalJson")]
pub struct ConditionalTable {
    space_in: VariableSpace,
    space_out: VariableSpace,
    matrix: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConditionalJson {
    input: Vec<Variable>,
    output: Vec<Variable>,
    matrix: Vec<Vec<f64>>,
}

impl TryFrom<ConditionalJson> for ConditionalTable {
    type Error = Error;

    fn try_from(raw: ConditionalJson) -> Result<Self> {
        let space_in = VariableSpace::new(raw.input)?;
        let space_out = VariableSpace::new(raw.output)?;
        let matrix = matrix_from_rows(&raw.matrix)?;
        ConditionalTable::new(space_in, space_out, matrix)
    }
}

impl From<ConditionalTable> for ConditionalJson {
    fn from(t: ConditionalTable) -> Self {
        ConditionalJson {
            input: t.space_in.into(),
            output: t.space_out.into(),
            matrix: matrix_to_rows(&t.matrix),
        }
    }
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ConditionalTable {
    pub fn new(space_in: VariableSpace, space_out: VariableSpace, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != space_out.cardinality() || matrix.ncols() != space_in.cardinality() {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, spaces need {}x{}",
                matrix.nrows(),
                matrix.ncols(),
                space_out.cardinality(),
                space_in.cardinality()
            )));
        }
        if let Some(v) = matrix.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidTable(format!("channel entry {v} is negative or not finite")));
        }
        for (j, col) in matrix.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidTable(format!(
                    "column {} ({}) sums to {s}",
                    j,
                    space_in.describe(j)
                )));
            }
        }
        Ok(Self { space_in, space_out, matrix })
    }

    /// Channel between two single variables with indexed labels.
    pub fn from_rows(input: &str, output: &str, rows: &[Vec<f64>]) -> Result<Self> {
        let matrix = matrix_from_rows(rows)?;
        Self::new(
            VariableSpace::single(input, matrix.ncols())?,
            VariableSpace::single(output, matrix.nrows())?,
            matrix,
        )
    }

    /// Identity channel relabeling `space_in` as `space_out` (equal cardinality).
    pub fn identity(space_in: VariableSpace, space_out: VariableSpace) -> Result<Self> {
        let n = space_in.cardinality();
        if space_out.cardinality() != n {
            return Err(Error::ShapeMismatch("identity channel between unequal spaces".into()));
        }
        Self::new(space_in, space_out, DMatrix::identity(n, n))
    }

    pub fn space_in(&self) -> &VariableSpace {
        &self.space_in
    }

    pub fn space_out(&self) -> &VariableSpace {
        &self.space_out
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// `P(out | in = col)` as a vector.
    pub fn column(&self, col: usize) -> DVector<f64> {
        self.matrix.column(col).into_owned()
    }

    /// Renames the input and output spaces (shapes must agree).
    pub fn relabel(&self, space_in: VariableSpace, space_out: VariableSpace) -> Result<Self> {
        Self::new(space_in, space_out, self.matrix.clone())
    }

    /// `P(out | inner.in) = Σ_mid P(out | mid) P(mid | inner.in)`.
    pub fn compose(&self, inner: &ConditionalTable) -> Result<ConditionalTable> {
        if self.space_in != inner.space_out {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose P({:?}|{:?}) after P({:?}|{:?})",
                self.space_out.names(),
                self.space_in.names(),
                inner.space_out.names(),
                inner.space_in.names()
            )));
        }
        let mut matrix = &self.matrix * &inner.matrix;
        renormalize_columns(&mut matrix);
        Self::new(inner.space_in.clone(), self.space_out.clone(), matrix)
    }

    /// Joint table over `(out, in)` given the marginal of the input variables.
    pub fn joint_with(&self, marginal: &JointTable) -> Result<JointTable> {
        if marginal.space() != &self.space_in {
            return Err(Error::ShapeMismatch("marginal space differs from channel input".into()));
        }
        let space = self.space_out.concat(&self.space_in)?;
        let cols = self.cols();
        let mut probs = vec![0.0; space.cardinality()];
        for r in 0..self.rows() {
            for c in 0..cols {
                probs[r * cols + c] = self.matrix[(r, c)] * marginal.probs()[c];
            }
        }
        JointTable::new(space, probs)
    }

    /// Output marginal `Σ_in P(out|in) p(in)`.
    pub fn push_forward(&self, input: &DVector<f64>) -> DVector<f64> {
        &self.matrix * input
    }
}

/// Rescales columns to sum exactly to one; only used after products of
/// column-stochastic matrices, where drift is round-off.
pub(crate) fn renormalize_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        if s > 0.0 {
            col /= s;
        }
    }
}
