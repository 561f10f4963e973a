mod common;

use proptest::prelude::*;
use sensorshift::prob::{
    conditional_entropy_given_output, conditional_mutual_information, kl_divergence, max_conditional_entropy,
    ConditionalTable, JointTable, MaxEntropyOptions, ZeroHandling,
};

fn positive_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|v| v / t).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn condition_then_reweight_reconstructs_joint(p in positive_vec(12)) {
        let j = JointTable::new(common::space(&[("A", 3), ("B", 2), ("C", 2)]), p).unwrap();
        let cond = j.condition(&["B", "C"], ZeroHandling::Error).unwrap();
        let marg = j.marginalize(&["B", "C"]).unwrap();
        let back = cond.joint_with(&marg).unwrap();
        for (x, y) in back.probs().iter().zip(j.probs()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        for c in 0..cond.cols() {
            prop_assert!((cond.column(c).sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_only_at_equality(p in positive_vec(5), q in positive_vec(5)) {
        let s = common::space(&[("X", 5)]);
        let (jp, jq) = (JointTable::new(s.clone(), p.clone()).unwrap(), JointTable::new(s, q.clone()).unwrap());
        let d = kl_divergence(&jp, &jq).unwrap();
        let oracle: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
        prop_assert!(d >= 0.0);
        prop_assert!((d - oracle.max(0.0)).abs() <= 1e-12);
        prop_assert!(kl_divergence(&jp, &jp).unwrap().abs() <= 1e-15);
        let linf = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if linf > 1e-3 {
            prop_assert!(d > 0.0);
        }
    }

    #[test]
    fn cmi_is_symmetric(p in positive_vec(18)) {
        let j = JointTable::new(common::space(&[("A", 3), ("B", 2), ("C", 3)]), p).unwrap();
        let ab = conditional_mutual_information(&j, &["A"], &["B"], &["C"]).unwrap();
        let ba = conditional_mutual_information(&j, &["B"], &["A"], &["C"]).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab >= 0.0);
    }

    #[test]
    fn cmi_vanishes_under_conditional_independence(pc in positive_vec(2), pa in positive_vec(6), pb in positive_vec(4)) {
        // P(a, b, c) = P(c) P(a|c) P(b|c)
        let j = JointTable::from_fn(common::space(&[("A", 3), ("B", 2), ("C", 2)]), |m| {
            let (a, b, c) = (m[0], m[1], m[2]);
            pc[c] * pa[c * 3 + a] / pa[c * 3..c * 3 + 3].iter().sum::<f64>() * pb[c * 2 + b] / pb[c * 2..c * 2 + 2].iter().sum::<f64>()
        })
        .unwrap();
        let i = conditional_mutual_information(&j, &["A"], &["B"], &["C"]).unwrap();
        prop_assert!(i.abs() <= 1e-10);
    }

    #[test]
    fn cmi_matches_entropy_oracle(p in positive_vec(8)) {
        let j = JointTable::new(common::space(&[("A", 2), ("B", 2), ("C", 2)]), p.clone()).unwrap();
        let h = |keep: &[usize]| {
            let mut m = std::collections::BTreeMap::<Vec<usize>, f64>::new();
            for (idx, &v) in p.iter().enumerate() {
                let bits = [idx >> 2 & 1, idx >> 1 & 1, idx & 1];
                *m.entry(keep.iter().map(|&k| bits[k]).collect()).or_default() += v;
            }
            common::entropy(&m.into_values().collect::<Vec<_>>())
        };
        let oracle = h(&[0, 2]) + h(&[1, 2]) - h(&[0, 1, 2]) - h(&[2]);
        let i = conditional_mutual_information(&j, &["A"], &["B"], &["C"]).unwrap();
        prop_assert!((i - oracle.max(0.0)).abs() <= 1e-12);
    }
}

#[test]
fn max_conditional_entropy_dominates_random_inputs() {
    let mut rng = common::rng(11);
    let options = MaxEntropyOptions::default();
    for _ in 0..5 {
        let sensor = common::channel(&mut rng, &[("X", 3)], &[("Y", 2)]);
        let best = max_conditional_entropy(&sensor, &options).unwrap();
        for _ in 0..100 {
            let p = common::simplex(&mut rng, 3);
            assert!(conditional_entropy_given_output(&sensor, &p) <= best.value + 1e-9);
        }
    }
}

#[test]
fn max_conditional_entropy_of_a_constant_sensor() {
    let sensor = ConditionalTable::from_rows("X", "Y", &[vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
    let best = max_conditional_entropy(&sensor, &MaxEntropyOptions::default()).unwrap();
    assert!((best.value - 4f64.ln()).abs() < 1e-6);
}
