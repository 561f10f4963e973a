use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{
    conditional_mutual_information, kl_vectors, max_conditional_entropy, ConditionalTable, JointTable,
    MaxEntropyOptions, ZeroHandling,
};

/// `p̃(z | x, a) = Σ_y p_S(z | y, a) p(y | x)`.
///
/// `cond` is `P_S(Z | Y_S, A)`; its input variables that are outputs of
/// `sensor` are treated as observations and the rest as actions, in any
/// order. The result has input space `(X, A)`.
pub fn average_proxy(cond: &ConditionalTable, sensor: &ConditionalTable) -> Result<ConditionalTable> {
    let obs_names = sensor.space_out().names();
    let in_space = cond.space_in();
    for name in &obs_names {
        if !in_space.contains(name) {
            return Err(Error::ShapeMismatch(format!("conditional does not condition on `{name}`")));
        }
    }
    if in_space.subspace(&obs_names)? != *sensor.space_out() {
        return Err(Error::ShapeMismatch("conditional and sensor disagree on observation ranges".into()));
    }
    let action_names: Vec<&str> = in_space.names().into_iter().filter(|n| !obs_names.contains(n)).collect();
    let action_space = in_space.subspace(&action_names)?;
    let obs_space = sensor.space_out();
    let obs_pos: Vec<usize> = obs_names.iter().map(|n| in_space.position(n)).collect::<Result<_>>()?;
    let act_pos: Vec<usize> = action_names.iter().map(|n| in_space.position(n)).collect::<Result<_>>()?;

    let na = action_space.cardinality();
    let ny = obs_space.cardinality();
    let mut column_of = vec![0usize; ny * na];
    let mut multi = vec![0usize; in_space.len()];
    for y in 0..ny {
        let ym = obs_space.multi_index(y);
        for a in 0..na {
            let am = action_space.multi_index(a);
            for (k, &p) in obs_pos.iter().enumerate() {
                multi[p] = ym[k];
            }
            for (k, &p) in act_pos.iter().enumerate() {
                multi[p] = am[k];
            }
            column_of[y * na + a] = in_space.flat_index(&multi);
        }
    }

    let s = sensor.matrix();
    let c = cond.matrix();
    let nx = sensor.cols();
    let mut out = DMatrix::zeros(cond.rows(), nx * na);
    for x in 0..nx {
        for a in 0..na {
            for y in 0..ny {
                let w = s[(y, x)];
                if w == 0.0 {
                    continue;
                }
                let src = column_of[y * na + a];
                for z in 0..cond.rows() {
                    out[(z, x * na + a)] += w * c[(z, src)];
                }
            }
        }
    }
    crate::prob::renormalize_columns(&mut out);
    ConditionalTable::new(sensor.space_in().concat(&action_space)?, cond.space_out().clone(), out)
}

/// Expected KL gap of the average proxy together with its two upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    /// `Σ_{x,a} P_S(x,a) D(P_S(Z|x,a) ‖ P̃(Z|x,a))`.
    pub gap: f64,
    /// `I_S(X ; Z | A, Y_S)`.
    pub mi_bound: f64,
    /// `max_{P'(X)} H(X | Y_S)` for the sensor implied by the joint.
    pub entropy_bound: f64,
}

/// Evaluates the proxy gap and its bounds on a full joint over
/// `(Z, A, X, Y_S)`; the expectation is under the source `P_S(X, A)`.
pub fn proxy_gap_bound(
    joint: &JointTable,
    outcome: &[&str],
    action: &[&str],
    state: &[&str],
    observation: &[&str],
    options: &MaxEntropyOptions,
) -> Result<GapBound> {
    let mut order: Vec<&str> = outcome.to_vec();
    order.extend(state);
    order.extend(action);
    order.extend(observation);
    let j = joint.permute(&order)?;

    let mut xa: Vec<&str> = state.to_vec();
    xa.extend(action);
    let mut zxa: Vec<&str> = outcome.to_vec();
    zxa.extend(&xa);
    let truth = j.marginalize(&zxa)?.condition(&xa, ZeroHandling::Error)?;

    let mut ay: Vec<&str> = action.to_vec();
    ay.extend(observation);
    let mut zay: Vec<&str> = outcome.to_vec();
    zay.extend(&ay);
    let cond = j.marginalize(&zay)?.condition(&ay, ZeroHandling::Error)?;

    let mut xy: Vec<&str> = state.to_vec();
    xy.extend(observation);
    let sensor = j.marginalize(&xy)?.condition(state, ZeroHandling::Error)?;

    let proxy = average_proxy(&cond, &sensor)?;
    let weights = j.marginalize(&xa)?;
    let mut gap = 0.0;
    for (col, &w) in weights.probs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = truth.column(col);
        let q = proxy.column(col);
        gap += w * kl_vectors(p.as_slice(), q.as_slice()).map_err(|_| Error::SupportViolation {
            cell: weights.space().describe(col),
        })?;
    }
    let mut given: Vec<&str> = action.to_vec();
    given.extend(observation);
    let mi_bound = conditional_mutual_information(&j, state, outcome, &given)?;
    let entropy_bound = max_conditional_entropy(&sensor, options)?.value;
    Ok(GapBound { gap, mi_bound, entropy_bound })
}
