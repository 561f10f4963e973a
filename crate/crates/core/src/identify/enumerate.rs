use std::cmp::Ordering;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use super::polytope::SolutionPolytope;
use super::system::{row_reduce_to_full_rank, IdentificationSystem};
use crate::error::{Error, Result};

/// Sub-matrices with `|det R|` at or below this are treated as singular.
pub const DET_TOL: f64 = 1e-10;
/// Candidates are accepted if every entry is at least `-NONNEG_TOL`.
pub const NONNEG_TOL: f64 = 1e-10;
/// Vertices closer than this in ∞-norm are merged.
pub const DEDUP_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EnumerationOptions {
    /// Maximum number of `(ℓ−m)`-row sub-matrices that may be examined.
    pub combination_limit: u128,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self { combination_limit: 1_000_000 }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Columns of a non-singular `m × m` block, picked by full-pivoting
/// elimination (largest remaining pivot first).
fn pivot_columns(a: &DMatrix<f64>) -> Vec<usize> {
    let (m, l) = a.shape();
    let mut work = a.clone();
    let mut used_rows = vec![false; m];
    let mut chosen = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best = (0usize, 0usize, -1.0f64);
        for r in (0..m).filter(|&r| !used_rows[r]) {
            for c in (0..l).filter(|c| !chosen.contains(c)) {
                let v = work[(r, c)].abs();
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        let (pr, pc, _) = best;
        used_rows[pr] = true;
        chosen.push(pc);
        let pivot = work[(pr, pc)];
        for r in (0..m).filter(|&r| !used_rows[r]) {
            let factor = work[(r, pc)] / pivot;
            if factor != 0.0 {
                for c in 0..l {
                    work[(r, c)] -= factor * work[(pr, c)];
                }
            }
        }
    }
    chosen
}

/// Orthonormal basis of the null space of `a` (`m × ℓ`, full row rank), from
/// the right singular vectors with the smallest singular values.
fn null_space_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, l) = a.shape();
    let mut square = DMatrix::zeros(l, l);
    square.view_mut((0, 0), (m, l)).copy_from(a);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let k = l - m;
    DMatrix::from_fn(l, k, |row, col| v_t[(order[col], row)])
}

/// Descending lexicographic order; vertices placing mass on earlier
/// coordinates come first.
pub(crate) fn lex_descending(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

pub(crate) fn sort_and_dedup(mut vertices: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    vertices.sort_by(lex_descending);
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if !out.iter().any(|u| (u - &v).amax() <= DEDUP_TOL) {
            out.push(v);
        }
    }
    out
}

/// Enumerates the corner vectors whose convex hull is the set of
/// non-negative solutions of `sys`.
///
/// The system is first reduced to full row rank. With `m = ℓ` the unique
/// solution is a direct solve. Otherwise the columns are rearranged into
/// `[D E]` with `D` non-singular, a particular solution `b = [D⁻¹ rhs; 0]` and
/// a null-space basis `M` from the SVD are formed, and for every
/// `(ℓ−m) × (ℓ−m)` row sub-matrix `R` of `M` the candidate `b − M R⁻¹ b̂` is
/// kept when it is non-negative.
pub fn enumerate_solution_vertices(
    sys: &IdentificationSystem,
    options: &EnumerationOptions,
) -> Result<SolutionPolytope> {
    let reduced = row_reduce_to_full_rank(sys)?;
    let a = reduced.matrix();
    let rhs = reduced.rhs();
    let (m, l) = a.shape();

    if m == l {
        let x = a
            .clone()
            .lu()
            .solve(rhs)
            .ok_or_else(|| Error::Infeasible("square sensor is singular".into()))?;
        if x.iter().any(|&v| v < -NONNEG_TOL) {
            return Err(Error::Infeasible("unique solution has negative entries".into()));
        }
        return Ok(SolutionPolytope::new(sys.clone(), vec![x.map(|v| v.max(0.0))]));
    }

    let k = l - m;
    let combinations = binomial(l, k);
    if combinations > options.combination_limit {
        return Err(Error::CombinatorialLimit { combinations, limit: options.combination_limit });
    }

    let pivots = pivot_columns(a);
    let mut perm = pivots.clone();
    perm.extend((0..l).filter(|c| !pivots.contains(c)));
    let arranged = a.select_columns(&perm);
    let d = arranged.columns(0, m).into_owned();
    let particular = d
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::Infeasible("pivot block is singular".into()))?;
    let mut b = DVector::zeros(l);
    b.rows_mut(0, m).copy_from(&particular);
    let basis = null_space_basis(&arranged);

    let mut candidates = Vec::new();
    for rows in (0..l).combinations(k) {
        let r = basis.select_rows(&rows);
        if r.determinant().abs() <= DET_TOL {
            continue;
        }
        let b_hat = DVector::from_iterator(k, rows.iter().map(|&i| b[i]));
        let Some(t) = r.lu().solve(&b_hat) else { continue };
        let x = &b - &basis * t;
        if x.iter().all(|&v| v >= -NONNEG_TOL) {
            // undo the column rearrangement
            let mut original = DVector::zeros(l);
            for (pos, &col) in perm.iter().enumerate() {
                // round-off below the tolerance would add spurious support
                original[col] = if x[pos] < NONNEG_TOL { 0.0 } else { x[pos] };
            }
            for &row in &rows {
                original[perm[row]] = 0.0;
            }
            candidates.push(original);
        }
    }

    if candidates.is_empty() {
        return Err(Error::Infeasible("no non-negative basic solution".into()));
    }
    Ok(SolutionPolytope::new(sys.clone(), sort_and_dedup(candidates)))
}
