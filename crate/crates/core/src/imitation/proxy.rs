use nalgebra::DMatrix;
use serde::Serialize;

use super::policy::Policy;
use crate::error::{Error, Result};
use crate::prob::{
    conditional_entropy, conditional_mutual_information, kl_vectors, ConditionalTable, JointTable, ZeroHandling,
};

/// `π̃(a | y) = Σ_y' p_S(a | y') p_S(y' | y)`: the spectator's conditional
/// averaged through the channel from the demonstrator's observation.
pub fn proxy_case1(p_a_given_ys: &ConditionalTable, channel: &ConditionalTable) -> Result<Policy> {
    Ok(Policy::new(p_a_given_ys.compose(channel)?))
}

/// `π(a | o) ∝ exp(Σ_m w(m | o) log p(a | m))`, normalized over actions.
fn geometric_pool(p_a_given_m: &ConditionalTable, weights: &ConditionalTable) -> Result<ConditionalTable> {
    if p_a_given_m.space_in() != weights.space_out() {
        return Err(Error::ShapeMismatch(format!(
            "pooling weights over {:?} do not match the policy input {:?}",
            weights.space_out().names(),
            p_a_given_m.space_in().names()
        )));
    }
    let p = p_a_given_m.matrix();
    let w = weights.matrix();
    let (na, no) = (p.nrows(), w.ncols());
    let mut out = DMatrix::zeros(na, no);
    for o in 0..no {
        let mut logs = vec![0.0; na];
        for m in 0..w.nrows() {
            let wm = w[(m, o)];
            if wm == 0.0 {
                continue;
            }
            for (a, l) in logs.iter_mut().enumerate() {
                let v = p[(a, m)];
                if v <= 0.0 {
                    return Err(Error::SupportViolation {
                        cell: format!("{}, {}", p_a_given_m.space_out().describe(a), p_a_given_m.space_in().describe(m)),
                    });
                }
                *l += wm * v.ln();
            }
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        for a in 0..na {
            out[(a, o)] = (logs[a] - top).exp() / total;
        }
    }
    ConditionalTable::new(weights.space_in().clone(), p_a_given_m.space_out().clone(), out)
}

/// Geometric pooling of `p_S(a | y_S)` through `P(Y_S | Y_T)`.
pub fn proxy_case2(p_a_given_ys: &ConditionalTable, back_channel: &ConditionalTable) -> Result<Policy> {
    Ok(Policy::new(geometric_pool(p_a_given_ys, back_channel)?))
}

/// Linear averaging to `p̃(a | x) = Σ_y p_S(a | y) p_S(y | x)`, then
/// geometric pooling over the posterior `P(X | Y_T)`.
pub fn proxy_case3(
    p_a_given_ys: &ConditionalTable,
    sensor_s: &ConditionalTable,
    posterior: &ConditionalTable,
) -> Result<Policy> {
    let p_a_given_x = p_a_given_ys.compose(sensor_s)?;
    Ok(Policy::new(geometric_pool(&p_a_given_x, posterior)?))
}

/// Case-1 gap and its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Case1Bound {
    /// `Σ_y P_S(y) D(π_D(·|y) ‖ π̃(·|y))` over the demonstrator's observation.
    pub kl: f64,
    /// `I_S(A ; Y_D | Y_S)`.
    pub mi: f64,
    /// `H(Y_D | Y_S)`.
    pub entropy: f64,
}

/// Evaluates the case-1 proxy against the demonstrator on a joint over
/// `(A, Y_D, Y_S)`.
pub fn bound_case1(joint: &JointTable, action: &[&str], demo: &[&str], spectator: &[&str]) -> Result<Case1Bound> {
    let mut a_d = action.to_vec();
    a_d.extend(demo);
    let mut a_s = action.to_vec();
    a_s.extend(spectator);
    let mut s_d = spectator.to_vec();
    s_d.extend(demo);
    let pi_d = joint.marginalize(&a_d)?.condition(demo, ZeroHandling::Error)?;
    let p_a_s = joint.marginalize(&a_s)?.condition(spectator, ZeroHandling::Error)?;
    let channel = joint.marginalize(&s_d)?.condition(demo, ZeroHandling::Error)?;
    let proxy = p_a_s.compose(&channel)?;
    let weights = joint.marginalize(demo)?;
    let mut kl = 0.0;
    for (y, &w) in weights.probs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = pi_d.column(y);
        let q = proxy.column(y);
        kl += w * kl_vectors(p.as_slice(), q.as_slice())
            .map_err(|_| Error::SupportViolation { cell: weights.space().describe(y) })?;
    }
    Ok(Case1Bound {
        kl,
        mi: conditional_mutual_information(joint, action, demo, spectator)?,
        entropy: conditional_entropy(joint, demo, spectator)?,
    })
}

/// `Σ_{y_T} p(y_T) Σ_{y_S} p(y_S|y_T) Σ_a π̃(a|y_T) log(π̃(a|y_T) / p_S(a|y_S))`
/// with `π̃` the case-2 proxy.
pub fn bound_case2(p_a_given_ys: &ConditionalTable, back_channel: &ConditionalTable, p_yt: &JointTable) -> Result<f64> {
    if p_yt.space() != back_channel.space_in() {
        return Err(Error::ShapeMismatch("target observation marginal does not match the back channel".into()));
    }
    let pooled = proxy_case2(p_a_given_ys, back_channel)?;
    let p = p_a_given_ys.matrix();
    let w = back_channel.matrix();
    let mut total = 0.0;
    for (t, &pt) in p_yt.probs().iter().enumerate() {
        if pt == 0.0 {
            continue;
        }
        for s in 0..w.nrows() {
            let ws = w[(s, t)];
            if ws == 0.0 {
                continue;
            }
            for a in 0..p.nrows() {
                let q = pooled.prob(a, t);
                if q > 0.0 {
                    total += pt * ws * q * (q / p[(a, s)]).ln();
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Variable, VariableSpace};
    use approx::assert_abs_diff_eq;

    fn p_a_ys() -> ConditionalTable {
        ConditionalTable::from_rows("YS", "A", &[vec![0.9, 0.5], vec![0.1, 0.5]]).unwrap()
    }

    #[test]
    fn identity_channels_reproduce_the_spectator_conditional() {
        let p = p_a_ys();
        let id = ConditionalTable::identity(VariableSpace::single("YD", 2).unwrap(), VariableSpace::single("YS", 2).unwrap()).unwrap();
        assert_eq!(proxy_case1(&p, &id).unwrap().matrix(), p.matrix());
        let pooled = proxy_case2(&p, &id).unwrap();
        for (a, b) in pooled.matrix().iter().zip(p.matrix().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let sensor = ConditionalTable::identity(VariableSpace::single("X", 2).unwrap(), VariableSpace::single("YS", 2).unwrap()).unwrap();
        let posterior = ConditionalTable::identity(VariableSpace::single("YT", 2).unwrap(), VariableSpace::single("X", 2).unwrap()).unwrap();
        let p3 = proxy_case3(&p, &sensor, &posterior).unwrap();
        for (a, b) in p3.matrix().iter().zip(p.matrix().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn independent_channel_collapses_to_marginal() {
        let p = p_a_ys();
        // P(Y_S | Y_D) with identical columns (0.3, 0.7)
        let channel = ConditionalTable::from_rows("YD", "YS", &[vec![0.3, 0.3, 0.3], vec![0.7, 0.7, 0.7]]).unwrap();
        let pi = proxy_case1(&p, &channel).unwrap();
        for y in 0..3 {
            assert_abs_diff_eq!(pi.prob(0, y), 0.3 * 0.9 + 0.7 * 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn hand_computed_geometric_pooling() {
        let p = p_a_ys();
        let back = ConditionalTable::from_rows("YT", "YS", &[vec![0.5], vec![0.5]]).unwrap();
        let pi = proxy_case2(&p, &back).unwrap();
        let (u0, u1) = (0.45f64.sqrt(), 0.05f64.sqrt());
        assert_abs_diff_eq!(pi.prob(0, 0), u0 / (u0 + u1), epsilon = 1e-15);
        assert_abs_diff_eq!(pi.prob(0, 0), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn zero_conditional_is_rejected() {
        let p = ConditionalTable::from_rows("YS", "A", &[vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        let back = ConditionalTable::from_rows("YT", "YS", &[vec![0.5], vec![0.5]]).unwrap();
        assert!(matches!(proxy_case2(&p, &back), Err(Error::SupportViolation { .. })));
    }

    #[test]
    fn posterior_atom_returns_averaged_column() {
        let p = p_a_ys();
        let sensor = ConditionalTable::from_rows("X", "YS", &[vec![0.8, 0.3], vec![0.2, 0.7]]).unwrap();
        let posterior = ConditionalTable::from_rows("YT", "X", &[vec![0.0], vec![1.0]]).unwrap();
        let pi = proxy_case3(&p, &sensor, &posterior).unwrap();
        assert_abs_diff_eq!(pi.prob(0, 0), 0.9 * 0.3 + 0.5 * 0.7, epsilon = 1e-15);
    }

    #[test]
    fn deterministic_back_channel_has_zero_bound() {
        let p = ConditionalTable::from_rows("YS", "A", &[vec![0.9, 0.5, 0.2], vec![0.1, 0.5, 0.8]]).unwrap();
        // every y_T maps to a single y_S
        let back = ConditionalTable::from_rows("YT", "YS", &[vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
        let p_yt = JointTable::new(VariableSpace::single("YT", 4).unwrap(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_abs_diff_eq!(bound_case2(&p, &back, &p_yt).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_policy_has_zero_bound() {
        let p = ConditionalTable::from_rows("YS", "A", &[vec![0.3, 0.3], vec![0.7, 0.7]]).unwrap();
        let back = ConditionalTable::from_rows("YT", "YS", &[vec![0.4, 0.9], vec![0.6, 0.1]]).unwrap();
        let p_yt = JointTable::new(VariableSpace::single("YT", 2).unwrap(), vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(bound_case2(&p, &back, &p_yt).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn deterministic_demo_observation_has_zero_gap() {
        // Y_D = Y_S copy, A depends on Y_D
        let s = VariableSpace::new(vec![Variable::indexed("A", 2), Variable::indexed("YD", 2), Variable::indexed("YS", 2)]).unwrap();
        let j = JointTable::from_fn(s, |m| {
            let pi = [[0.7, 0.3], [0.2, 0.8]][m[1]][m[0]];
            if m[1] == m[2] { 0.5 * pi } else { 0.0 }
        })
        .unwrap();
        let b = bound_case1(&j, &["A"], &["YD"], &["YS"]).unwrap();
        assert_abs_diff_eq!(b.kl, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.mi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.entropy, 0.0, epsilon = 1e-12);
    }
}
