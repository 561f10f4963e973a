mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use sensorshift::identify::{
    enumerate_solution_vertices, polytope_contains, row_reduce_to_full_rank, select_point_lp, EnumerationOptions,
    IdentificationSystem,
};
use sensorshift::{LinearConstraint, Relation};

fn system(seed: u64, max_l: usize) -> (IdentificationSystem, DVector<f64>, bool) {
    let mut rng = common::rng(seed);
    let l = 2 + (seed as usize % (max_l - 1));
    let m = 1 + (seed as usize / 7) % (l - 1);
    let dup = seed % 3 == 0;
    let (sys, v0) = common::feasible_system(&mut rng, m.min(l - 1), l, dup && l > 2);
    (sys, v0, dup)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vertices_are_feasible(seed in any::<u64>()) {
        let (sys, v0, _) = system(seed, 6);
        let p = enumerate_solution_vertices(&sys, &EnumerationOptions::default()).unwrap();
        prop_assert!(!p.vertices().is_empty());
        for v in p.vertices() {
            prop_assert!(common::residual(&sys, v) <= 1e-8);
            prop_assert!(v.min() >= -1e-10);
        }
        // the generating solution lies in the hull
        prop_assert!(polytope_contains(&p, &v0, 1e-7));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn convex_combinations_are_feasible(seed in any::<u64>()) {
        let (sys, _, _) = system(seed, 6);
        let p = enumerate_solution_vertices(&sys, &EnumerationOptions::default()).unwrap();
        let mut rng = common::rng(seed ^ 0x5eed);
        for _ in 0..100 {
            let w = common::simplex(&mut rng, p.vertices().len());
            let point = p.combine(&w);
            prop_assert!(common::residual(&sys, &point) <= 1e-7);
            prop_assert!(point.min() >= -1e-10);
        }
    }

    #[test]
    fn lattice_solutions_lie_in_the_hull(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let l = 2 + (seed as usize % 3);
        let m = 1 + (seed as usize / 3) % (l - 1);
        let sys = common::lattice_system(&mut rng, m, l, 40, l > 2 && seed % 2 == 0);
        let p = enumerate_solution_vertices(&sys, &EnumerationOptions::default()).unwrap();
        let mut found = 0;
        for point in common::simplex_lattice(l, 40) {
            if common::residual(&sys, &point) <= 1e-12 {
                found += 1;
                prop_assert!(polytope_contains(&p, &point, 0.05));
            }
        }
        prop_assert!(found >= 1);
    }

    #[test]
    fn invertible_systems_are_solved_directly(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let l = 2 + (seed as usize % 4);
        let a = common::stochastic(&mut rng, l, l);
        let v0 = DVector::from_vec(common::simplex(&mut rng, l)) * 0.7;
        let rhs = &a * &v0;
        let direct = a.clone().qr().solve(&rhs).unwrap();
        let sys = IdentificationSystem::from_matrix(a, rhs).unwrap();
        let p = enumerate_solution_vertices(&sys, &EnumerationOptions::default()).unwrap();
        prop_assert!(p.is_singleton());
        prop_assert!((&p.vertices()[0] - direct).amax() <= 1e-10);
    }

    #[test]
    fn row_reduction_keeps_the_solution_set(seed in any::<u64>()) {
        let (sys, v0, _) = system(seed, 5);
        let reduced = row_reduce_to_full_rank(&sys).unwrap();
        let rank = reduced.matrix().clone().svd(false, false).rank(1e-10);
        prop_assert_eq!(rank, reduced.num_rows());
        prop_assert!(reduced.num_rows() <= sys.num_rows());
        prop_assert!((reduced.matrix() * &v0 - reduced.rhs()).amax() <= 1e-10);
    }
}

#[test]
fn lp_selection_respects_extra_constraints() {
    let sys = IdentificationSystem::from_matrix(
        nalgebra::DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]),
        DVector::from_vec(vec![0.5, 0.5]),
    )
    .unwrap();
    let p = enumerate_solution_vertices(&sys, &EnumerationOptions::default()).unwrap();
    // v = (0.5 - c/2, 0.5 - c/2, c); cap c at 0.4 and maximize it
    let cap = LinearConstraint { coeffs: vec![0.0, 0.0, 1.0], relation: Relation::Le, rhs: 0.4 };
    let v = select_point_lp(&p, &[0.0, 0.0, -1.0], &[cap]).unwrap();
    // later lexicographic stages may move the objective by the stage slack
    assert!((v[2] - 0.4).abs() < 1e-8, "{v}");
    assert!((v[0] - 0.3).abs() < 1e-8 && (v[1] - 0.3).abs() < 1e-8);
}
