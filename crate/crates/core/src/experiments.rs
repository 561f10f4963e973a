//! End-to-end pipelines for the two simulated experiments: effect-estimation
//! error against training size on car-following data, and policy recovery at
//! probe cells of the driving scene.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::action_effect::{linear_average_proxy, linear_transfer_estimate, EffectEstimate};
use crate::error::Result;
use crate::imitation::{
    exact_policy_solution_set, forbid_action, proxy_case1, select_joint_lp, Policy, PolicyIdentifyOptions,
    SelectionOptions,
};
use crate::prob::ZeroHandling;
use crate::sim::{estimate_joint, generate_carfollow, CarFollowConfig, DrivingScene, DrivingSceneConfig, SampleSet};
use crate::LinearConstraint;

/// Ridge weight of the regression inside the linear proxy baseline.
const PROXY_LAMBDA: f64 = 1e-9;

/// Mean and across-seed variance of a metric at each sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub method: String,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// `per_seed[s][k]` is seed `s`'s value at size `k`.
    pub per_seed: Vec<Vec<f64>>,
}

impl Curve {
    fn from_runs(method: &str, per_seed: Vec<Vec<f64>>) -> Self {
        let k = per_seed.first().map_or(0, Vec::len);
        let r = per_seed.len() as f64;
        let mean: Vec<f64> = (0..k).map(|i| per_seed.iter().map(|s| s[i]).sum::<f64>() / r).collect();
        let variance = (0..k)
            .map(|i| {
                if per_seed.len() < 2 {
                    return 0.0;
                }
                per_seed.iter().map(|s| (s[i] - mean[i]).powi(2)).sum::<f64>() / (r - 1.0)
            })
            .collect();
        Self { method: method.to_string(), mean, variance, per_seed }
    }
}

/// Test MSE curves of the car-following experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarFollowReport {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// `exact`, `proxy` and `truth` (the ground-truth coefficients, i.e. the
    /// outcome-noise floor).
    pub curves: Vec<Curve>,
}

impl CarFollowReport {
    pub fn curve(&self, method: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.method == method)
    }

    /// Long format: `method,size,mean,variance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,size,mean,variance\n");
        for c in &self.curves {
            for (k, n) in self.sizes.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", c.method, n, c.mean[k], c.variance[k]));
            }
        }
        out
    }
}

/// Runs `config.repetitions` seeds starting at `seed`; each fits both
/// estimators on the first `n` training rows for every configured `n` and
/// scores them on the seed's test rows.
pub fn run_carfollow(config: &CarFollowConfig, seed: u64) -> Result<CarFollowReport> {
    config.validate()?;
    let columns = config.train_columns();
    let state = config.state_columns();
    let seeds: Vec<u64> = (0..config.repetitions as u64).map(|r| seed.wrapping_add(r)).collect();
    let mut exact = Vec::new();
    let mut proxy = Vec::new();
    let mut truth = Vec::new();
    for &s in &seeds {
        let data = generate_carfollow(config, s)?;
        let score = |est: &EffectEstimate| est.mse(&data.test, &columns.outcome, &columns.action, &state);
        let oracle = EffectEstimate {
            d_hat: data.model.d.clone(),
            e_hat: data.model.e.clone(),
            lambda: 0.0,
            n: 0,
            intercept: DVector::zeros(1),
        };
        let floor = score(&oracle)?;
        let (mut ex, mut px) = (Vec::new(), Vec::new());
        for &n in &config.train_sizes {
            let train = data.train.head(n);
            ex.push(score(&linear_transfer_estimate(&train, &columns, &data.model.f, &data.model.sigma_nn, None)?)?);
            px.push(score(&linear_average_proxy(&train, &columns, &data.model.f, PROXY_LAMBDA)?)?);
        }
        exact.push(ex);
        proxy.push(px);
        truth.push(vec![floor; config.train_sizes.len()]);
    }
    Ok(CarFollowReport {
        sizes: config.train_sizes.clone(),
        seeds,
        curves: vec![
            Curve::from_runs("exact", exact),
            Curve::from_runs("proxy", proxy),
            Curve::from_runs("truth", truth),
        ],
    })
}

/// A policy entry `π(a | v_o, b_o)` tracked across sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeCell {
    pub action: i32,
    pub speed: f64,
    pub indicator: u8,
}

impl ProbeCell {
    pub fn label(&self) -> String {
        format!("({}|{},{})", self.action, self.speed, self.indicator)
    }
}

/// The three cells `(1|50,0)`, `(1|50,1)` and `(−1|50,1)`.
pub fn default_probes() -> Vec<ProbeCell> {
    vec![
        ProbeCell { action: 1, speed: 50.0, indicator: 0 },
        ProbeCell { action: 1, speed: 50.0, indicator: 1 },
        ProbeCell { action: -1, speed: 50.0, indicator: 1 },
    ]
}

/// Seed-averaged probe values at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub size: usize,
    pub probe: String,
    pub truth: f64,
    /// LP-selected policy from the exact identified set.
    pub exact_mean: f64,
    pub exact_abs_error: f64,
    /// Case-1 proxy.
    pub proxy_mean: f64,
    pub proxy_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrivingReport {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub rows: Vec<ProbeRow>,
    /// Largest `π̂(+1 | ·, b_o = 1)` and `π̂(−1 | ·, b_o = 0)` over all runs.
    pub max_forbidden_mass: f64,
    /// Largest L1 change made by projecting empirical tables onto the
    /// channel's range.
    pub max_projection_l1: f64,
}

impl DrivingReport {
    pub fn row(&self, size: usize, probe: &str) -> Option<&ProbeRow> {
        self.rows.iter().find(|r| r.size == size && r.probe == probe)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,probe,truth,exact_mean,exact_abs_error,proxy_mean,proxy_abs_error\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},\"{}\",{},{},{},{},{}\n",
                r.size, r.probe, r.truth, r.exact_mean, r.exact_abs_error, r.proxy_mean, r.proxy_abs_error
            ));
        }
        out
    }
}

/// Rules the target policy must obey: no speeding up while the other
/// vehicle indicates, no slowing down otherwise.
pub fn driving_constraints(scene: &DrivingScene, sets: &crate::imitation::PolicySolutionSets) -> Vec<LinearConstraint> {
    let up = DrivingScene::action_index(1).expect("action grid");
    let down = DrivingScene::action_index(-1).expect("action grid");
    (0..scene.config.speeds.len())
        .flat_map(|v| {
            [forbid_action(sets, up, scene.demo_index(v, 1)), forbid_action(sets, down, scene.demo_index(v, 0))]
        })
        .collect()
}

/// Policies recovered from one spectator sample.
#[derive(Debug, Clone)]
pub struct DrivingFit {
    pub exact: Policy,
    pub proxy: Policy,
    pub projection_l1: f64,
}

/// Exact identification with LP selection, and the case-1 proxy, from the
/// `(a, y_s)` columns of a sample.
pub fn fit_driving(scene: &DrivingScene, sample: &SampleSet) -> Result<DrivingFit> {
    let p_ays = estimate_joint(sample, &scene.action.concat(&scene.spectator)?, 0.0)?;
    let options = PolicyIdentifyOptions { project: true, ..Default::default() };
    let sets = exact_policy_solution_set(&p_ays, &scene.channel, &options)?;
    let p_a_given_ys = p_ays.condition(&["y_s"], ZeroHandling::UniformFill)?;
    let proxy = proxy_case1(&p_a_given_ys, &scene.channel)?;
    let selection = SelectionOptions {
        observation_marginal: Some(scene.p_yd.probs().to_vec()),
        reference: Some(proxy.clone()),
    };
    let joint = select_joint_lp(&sets, &driving_constraints(scene, &sets), &selection)?;
    let exact = normalize_with_fallback(scene, &joint, &proxy)?;
    Ok(DrivingFit { exact, proxy, projection_l1: sets.projection_l1 })
}

/// `π(a | y) ∝ P(a, y)`; observations the selected joint leaves without
/// mass (possible for tiny samples) take the proxy's column restricted to
/// the permitted actions.
fn normalize_with_fallback(scene: &DrivingScene, joint: &[DVector<f64>], proxy: &Policy) -> Result<Policy> {
    let na = scene.action.cardinality();
    let ny = scene.demo.cardinality();
    let up = DrivingScene::action_index(1).expect("action grid");
    let down = DrivingScene::action_index(-1).expect("action grid");
    let mut m = DMatrix::zeros(na, ny);
    for y in 0..ny {
        let mut col: Vec<f64> = (0..na).map(|a| joint[a][y].max(0.0)).collect();
        if col.iter().sum::<f64>() <= 0.0 {
            let forbidden = if y % 2 == 1 { up } else { down };
            col = (0..na).map(|a| if a == forbidden { 0.0 } else { proxy.prob(a, y) }).collect();
            if col.iter().sum::<f64>() <= 0.0 {
                col = (0..na).map(|a| if a == forbidden { 0.0 } else { 1.0 }).collect();
            }
        }
        let total: f64 = col.iter().sum();
        for a in 0..na {
            m[(a, y)] = col[a] / total;
        }
    }
    Policy::from_matrix(scene.demo.clone(), scene.action.clone(), m)
}

fn probe_index(scene: &DrivingScene, probe: &ProbeCell) -> Option<(usize, usize)> {
    let a = DrivingScene::action_index(probe.action)?;
    let v = scene.speed_index(probe.speed)?;
    Some((a, scene.demo_index(v, probe.indicator as usize)))
}

/// For every configured size and `config.repetitions` seeds starting at
/// `seed`, fits both policies and averages them at the probe cells.
pub fn run_driving(config: &DrivingSceneConfig, seed: u64, probes: &[ProbeCell]) -> Result<DrivingReport> {
    let scene = DrivingScene::new(config.clone())?;
    let cells = probes
        .iter()
        .map(|p| {
            probe_index(&scene, p)
                .ok_or_else(|| crate::Error::InvalidTable(format!("probe {} is not on the scene grid", p.label())))
        })
        .collect::<Result<Vec<_>>>()?;
    let seeds: Vec<u64> = (0..config.repetitions as u64).map(|r| seed.wrapping_add(r)).collect();
    let up = DrivingScene::action_index(1).expect("action grid");
    let down = DrivingScene::action_index(-1).expect("action grid");
    let mut rows = Vec::new();
    let mut max_forbidden: f64 = 0.0;
    let mut max_projection: f64 = 0.0;
    for &n in &config.sample_sizes {
        let mut sums = DMatrix::<f64>::zeros(cells.len(), 4);
        for &s in &seeds {
            let fit = fit_driving(&scene, &scene.sample(s, n)?)?;
            max_projection = max_projection.max(fit.projection_l1);
            for v in 0..config.speeds.len() {
                max_forbidden = max_forbidden
                    .max(fit.exact.prob(up, scene.demo_index(v, 1)))
                    .max(fit.exact.prob(down, scene.demo_index(v, 0)));
            }
            for (k, &(a, y)) in cells.iter().enumerate() {
                let truth = scene.pi_d.prob(a, y);
                let (e, p) = (fit.exact.prob(a, y), fit.proxy.prob(a, y));
                sums[(k, 0)] += e;
                sums[(k, 1)] += (e - truth).abs();
                sums[(k, 2)] += p;
                sums[(k, 3)] += (p - truth).abs();
            }
        }
        let r = seeds.len() as f64;
        for (k, probe) in probes.iter().enumerate() {
            let (a, y) = cells[k];
            rows.push(ProbeRow {
                size: n,
                probe: probe.label(),
                truth: scene.pi_d.prob(a, y),
                exact_mean: sums[(k, 0)] / r,
                exact_abs_error: sums[(k, 1)] / r,
                proxy_mean: sums[(k, 2)] / r,
                proxy_abs_error: sums[(k, 3)] / r,
            });
        }
    }
    Ok(DrivingReport {
        sizes: config.sample_sizes.clone(),
        seeds,
        rows,
        max_forbidden_mass: max_forbidden,
        max_projection_l1: max_projection,
    })
}
