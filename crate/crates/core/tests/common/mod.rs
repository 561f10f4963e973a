//! Random instance generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sensorshift::action_effect::{condition_number, LinearGaussianModel};
use sensorshift::identify::IdentificationSystem;
use sensorshift::prob::{ConditionalTable, JointTable, Variable, VariableSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Strictly positive probability vector.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.02..1.0)).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Column-stochastic `rows × cols` matrix with positive entries.
pub fn stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let cols_v: Vec<Vec<f64>> = (0..cols).map(|_| simplex(rng, rows)).collect();
    DMatrix::from_fn(rows, cols, |r, c| cols_v[c][r])
}

pub fn space(vars: &[(&str, usize)]) -> VariableSpace {
    VariableSpace::new(vars.iter().map(|&(n, k)| Variable::indexed(n, k)).collect()).unwrap()
}

pub fn joint(rng: &mut ChaCha8Rng, vars: &[(&str, usize)]) -> JointTable {
    let s = space(vars);
    let p = simplex(rng, s.cardinality());
    JointTable::new(s, p).unwrap()
}

pub fn channel(rng: &mut ChaCha8Rng, input: &[(&str, usize)], output: &[(&str, usize)]) -> ConditionalTable {
    let (si, so) = (space(input), space(output));
    let m = stochastic(rng, so.cardinality(), si.cardinality());
    ConditionalTable::new(si, so, m).unwrap()
}

/// `-Σ p ln p` computed directly.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Random feasible system: `rhs = A v₀` for a random non-negative `v₀` of
/// total mass in `(0.2, 1]`. With `duplicate` some sensor columns repeat,
/// which gives polytopes with many lattice points.
pub fn feasible_system(rng: &mut ChaCha8Rng, m: usize, l: usize, duplicate: bool) -> (IdentificationSystem, DVector<f64>) {
    let mut a = stochastic(rng, m, l);
    if duplicate {
        let src = rng.random_range(0..l);
        let dst = (src + 1 + rng.random_range(0..l - 1)) % l;
        let col = a.column(src).into_owned();
        a.set_column(dst, &col);
    }
    let mass = rng.random_range(0.2..1.0);
    let v0 = DVector::from_vec(simplex(rng, l)) * mass;
    let rhs = &a * &v0;
    (IdentificationSystem::from_matrix(a, rhs).unwrap(), v0)
}

/// Feasible system whose rhs comes from a lattice point of step `1/res`,
/// so the lattice enumeration below finds at least one exact solution.
pub fn lattice_system(rng: &mut ChaCha8Rng, m: usize, l: usize, res: usize, duplicate: bool) -> IdentificationSystem {
    let mut a = stochastic(rng, m, l);
    if duplicate {
        let src = rng.random_range(0..l);
        let dst = (src + 1 + rng.random_range(0..l - 1)) % l;
        let col = a.column(src).into_owned();
        a.set_column(dst, &col);
    }
    let mut counts = vec![0usize; l];
    for _ in 0..res {
        counts[rng.random_range(0..l)] += 1;
    }
    let v0 = DVector::from_iterator(l, counts.iter().map(|&c| c as f64 / res as f64));
    let rhs = &a * &v0;
    IdentificationSystem::from_matrix(a, rhs).unwrap()
}

/// All vectors with entries in `{0, 1/res, …}` summing to one.
pub fn simplex_lattice(l: usize, res: usize) -> Vec<DVector<f64>> {
    fn rec(l: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == l - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(l, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(l, res, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|c| DVector::from_iterator(l, c.into_iter().map(|k| k as f64 / res as f64)))
        .collect()
}

pub fn residual(sys: &IdentificationSystem, v: &DVector<f64>) -> f64 {
    (sys.matrix() * v - sys.rhs()).amax()
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let b = gaussian(rng, n, n);
    &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

/// Random linear-Gaussian model with `cond(F) ≤ 20` and a positive definite
/// `(A, X)` covariance.
pub fn linear_model(rng: &mut ChaCha8Rng, dx: usize, da: usize, dz: usize) -> (LinearGaussianModel, DMatrix<f64>) {
    let f = loop {
        let f = gaussian(rng, dx, dx);
        if condition_number(&f) <= 20.0 {
            break f;
        }
    };
    let nn = DMatrix::from_diagonal(&DVector::from_fn(dx, |_, _| rng.random_range(0.05..0.5)));
    let model = LinearGaussianModel::new(
        f,
        nn,
        gaussian(rng, dz, da),
        gaussian(rng, dz, dx),
        spd(rng, dz, 0.1),
    )
    .unwrap();
    let cov = spd(rng, da + dx, 0.3);
    (model, cov)
}

pub fn rel_frobenius(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (est - truth).norm() / truth.norm().max(f64::MIN_POSITIVE)
}
