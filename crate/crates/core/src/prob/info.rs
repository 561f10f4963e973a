//! Information measures on discrete tables. Natural logarithm throughout.

use super::joint::JointTable;
use crate::error::{Error, Result};

/// Negative information measures above this are rounding noise and clamp to 0.
const CLAMP_TOL: f64 = 1e-12;

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// `Σ p log(p/q)` over two aligned vectors, with `0 log(0/q) = 0`.
///
/// A cell with `p > 0` and `q = 0` is reported as a support violation carrying
/// the cell index, never as infinity.
pub fn kl_vectors(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("KL over {} vs {} cells", p.len(), q.len())));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation { cell: format!("#{i}") });
            }
            total += pi * (pi / qi).ln();
        }
    }
    Ok(total.max(0.0))
}

/// KL divergence `D(p || q)` of two joint tables over the same space.
pub fn kl_divergence(p: &JointTable, q: &JointTable) -> Result<f64> {
    if p.space() != q.space() {
        return Err(Error::ShapeMismatch("KL divergence between different spaces".into()));
    }
    kl_vectors(p.probs(), q.probs()).map_err(|e| match e {
        Error::SupportViolation { cell } => {
            let idx: usize = cell.trim_start_matches('#').parse().unwrap_or(0);
            Error::SupportViolation { cell: p.space().describe(idx) }
        }
        other => other,
    })
}

/// `H(a | c)` in nats.
pub fn conditional_entropy(j: &JointTable, a: &[&str], c: &[&str]) -> Result<f64> {
    check_disjoint(&[a, c])?;
    let ac: Vec<&str> = a.iter().chain(c).copied().collect();
    Ok(j.entropy(&ac)? - j.entropy(c)?)
}

/// `I(a; b | c) = H(a,c) + H(b,c) − H(a,b,c) − H(c)`.
pub fn conditional_mutual_information(
    j: &JointTable,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<f64> {
    check_disjoint(&[a, b, c])?;
    let ac: Vec<&str> = a.iter().chain(c).copied().collect();
    let bc: Vec<&str> = b.iter().chain(c).copied().collect();
    let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
    let value = j.entropy(&ac)? + j.entropy(&bc)? - j.entropy(&abc)? - j.entropy(c)?;
    Ok(clamp_nonnegative(value))
}

pub(crate) fn clamp_nonnegative(value: f64) -> f64 {
    if value < 0.0 && value > -CLAMP_TOL {
        0.0
    } else {
        value
    }
}

fn check_disjoint(sets: &[&[&str]]) -> Result<()> {
    for (i, s) in sets.iter().enumerate() {
        for (k, name) in s.iter().enumerate() {
            if s[..k].contains(name) || sets[i + 1..].iter().any(|t| t.contains(name)) {
                return Err(Error::OverlappingVariables(name.to_string()));
            }
        }
    }
    Ok(())
}
