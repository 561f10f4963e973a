use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::prob::{matrix_from_rows, matrix_to_rows, ConditionalTable, NORMALIZATION_TOL};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Allowed mismatch between a dependent row's rhs and its reconstruction.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Linear system `sensor · v = rhs` for a non-negative vector `v`, where the
/// sensor is the `m × ℓ` matrix `[P(yⁱ | xʲ)]` and `rhs` the observed
/// sub-probability vector `P(z, a, Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationSystem {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Original indices of the rows that are present.
    rows: Vec<usize>,
}

/// On-disk form: `{"sensor": [[...], ...], "rhs": [...]}`, sensor row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemJson {
    pub sensor: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl IdentificationSystem {
    pub fn new(sensor: &ConditionalTable, rhs: Vec<f64>) -> Result<Self> {
        Self::from_matrix(sensor.matrix().clone(), DVector::from_vec(rhs))
    }

    /// Validates column-stochasticity of `matrix` and the sub-probability rhs.
    pub fn from_matrix(matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != rhs.len() {
            return Err(Error::ShapeMismatch(format!(
                "sensor has {} rows, rhs has {} entries",
                matrix.nrows(),
                rhs.len()
            )));
        }
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::ShapeMismatch("empty sensor matrix".into()));
        }
        if matrix.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidTable("sensor entries must be non-negative".into()));
        }
        for (j, col) in matrix.column_iter().enumerate() {
            if (col.sum() - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidTable(format!("sensor column {j} sums to {}", col.sum())));
            }
        }
        if rhs.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidTable("rhs entries must be non-negative".into()));
        }
        if rhs.sum() > 1.0 + NORMALIZATION_TOL {
            return Err(Error::InvalidTable(format!("rhs sums to {} > 1", rhs.sum())));
        }
        let rows = (0..matrix.nrows()).collect();
        Ok(Self { matrix, rhs, rows })
    }

    pub fn from_json(raw: &SystemJson) -> Result<Self> {
        Self::from_matrix(matrix_from_rows(&raw.sensor)?, DVector::from_vec(raw.rhs.clone()))
    }

    pub fn to_json(&self) -> SystemJson {
        SystemJson { sensor: matrix_to_rows(&self.matrix), rhs: self.rhs.iter().copied().collect() }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// Indices (into the original system) of the rows kept.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Number of equations.
    pub fn num_rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of unknowns.
    pub fn dimension(&self) -> usize {
        self.matrix.ncols()
    }

    /// `‖sensor · v − rhs‖_∞`.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        (&self.matrix * v - &self.rhs).amax()
    }

    /// Replaces `rhs` by the closest (in L1) right-hand side that admits a
    /// non-negative solution, returning the new system and the L1 distance.
    /// Empirical tables are generally inconsistent with a rank-deficient
    /// sensor; this is the sample-level entry point to enumeration.
    pub fn project_to_feasible(&self) -> Result<(IdentificationSystem, f64)> {
        let (m, l) = self.matrix.shape();
        let mut lp = LinearProgram::nonnegative(l + 2 * m);
        for i in 0..m {
            let mut terms: Vec<(usize, f64)> = (0..l)
                .filter(|&j| self.matrix[(i, j)] != 0.0)
                .map(|j| (j, self.matrix[(i, j)]))
                .collect();
            terms.push((l + i, 1.0));
            terms.push((l + m + i, -1.0));
            lp.add(terms, Relation::Eq, self.rhs[i]);
        }
        let objective = (l..l + 2 * m).map(|i| (i, 1.0)).collect();
        let sol = lp.minimize(&objective)?;
        let v = DVector::from_iterator(l, sol.x[..l].iter().copied());
        let rhs = &self.matrix * v;
        Ok((Self { matrix: self.matrix.clone(), rhs, rows: self.rows.clone() }, sol.value))
    }
}

fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

fn rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    singular_values(m).iter().filter(|&&s| s > threshold).count()
}

/// Keeps a maximal linearly independent subset of rows (greedy, in order)
/// and checks that every dropped row's rhs agrees with the kept rows.
pub fn row_reduce_to_full_rank(sys: &IdentificationSystem) -> Result<IdentificationSystem> {
    let sigma_max = singular_values(&sys.matrix).max();
    let threshold = RANK_TOL * sigma_max.max(f64::MIN_POSITIVE);
    let (m, l) = sys.matrix.shape();

    let mut kept: Vec<usize> = Vec::new();
    let mut current_rank = 0;
    for i in 0..m {
        if current_rank == l {
            break;
        }
        let mut trial = kept.clone();
        trial.push(i);
        let sub = sys.matrix.select_rows(&trial);
        let r = rank(&sub, threshold);
        if r > current_rank {
            kept = trial;
            current_rank = r;
        }
    }

    if kept.len() < m {
        // express each dropped row through the kept rows: K^T c = row
        let k = sys.matrix.select_rows(&kept);
        let pinv = k
            .transpose()
            .pseudo_inverse(threshold)
            .map_err(|e| Error::Lp(format!("pseudo-inverse failed: {e}")))?;
        let kept_rhs = DVector::from_iterator(kept.len(), kept.iter().map(|&i| sys.rhs[i]));
        for i in (0..m).filter(|i| !kept.contains(i)) {
            let row = sys.matrix.row(i).transpose();
            let c = &pinv * row;
            let residual = (sys.rhs[i] - c.dot(&kept_rhs)).abs();
            if residual > CONSISTENCY_TOL {
                return Err(Error::Inconsistent { row: sys.rows[i], residual });
            }
        }
    }

    Ok(IdentificationSystem {
        matrix: sys.matrix.select_rows(&kept),
        rhs: DVector::from_iterator(kept.len(), kept.iter().map(|&i| sys.rhs[i])),
        rows: kept.iter().map(|&i| sys.rows[i]).collect(),
    })
}
