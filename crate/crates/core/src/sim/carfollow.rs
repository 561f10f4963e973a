use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::SampleSet;
use crate::action_effect::{condition_number, LinearColumns, LinearGaussianModel};
use crate::error::{Error, Result};

/// Largest accepted condition number of a drawn sensor matrix.
pub const SENSOR_CONDITION_LIMIT: f64 = 100.0;

/// How the spectator's sensor matrix `F` is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorSpec {
    /// Entries i.i.d. standard normal, redrawn until the condition number is
    /// at most [`SENSOR_CONDITION_LIMIT`].
    Random { seed: u64 },
    Identity,
}

/// Linear-Gaussian stand-in for recorded car-following data.
///
/// The state is `X = (gap, follower speed, lead speed, follower
/// acceleration)`, the action `A` is the demonstrator's acceleration and the
/// outcome `Z` the follower's acceleration a little later:
///
/// ```text
/// A = K (X + ν) + ε,   Z = D A + E X + O,   Y_S = F X + N
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarFollowConfig {
    pub x_mean: Vec<f64>,
    pub x_cov: Vec<Vec<f64>>,
    /// Demonstrator gain `K` on its noisy view of the state.
    pub policy_gain: Vec<f64>,
    /// Std of `ν`, the demonstrator's private perception noise.
    pub view_noise: f64,
    /// Std of `ε`.
    pub action_noise: f64,
    pub d: f64,
    pub e: Vec<f64>,
    /// Std of `O`.
    pub outcome_noise: f64,
    pub sensor: SensorSpec,
    /// Std of each coordinate of `N`; `Σ_NN = σ² I`.
    pub sensor_noise: f64,
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub repetitions: usize,
}

impl Default for CarFollowConfig {
    fn default() -> Self {
        Self {
            x_mean: vec![25.0, 20.0, 20.0, 0.0],
            x_cov: vec![
                vec![25.0, 2.0, 1.0, 0.5],
                vec![2.0, 4.0, 3.2, -0.2],
                vec![1.0, 3.2, 4.0, 0.2],
                vec![0.5, -0.2, 0.2, 0.25],
            ],
            policy_gain: vec![0.05, -0.4, 0.4, 0.5],
            view_noise: 0.5,
            action_noise: 0.2,
            d: 0.6,
            e: vec![0.02, -0.3, 0.3, 0.4],
            outcome_noise: 0.2,
            sensor: SensorSpec::Random { seed: 2 },
            sensor_noise: 0.7,
            train_sizes: vec![500, 1000, 2000, 5000, 10000, 20000],
            test_size: 1000,
            repetitions: 20,
        }
    }
}

impl CarFollowConfig {
    pub fn dim_x(&self) -> usize {
        self.x_mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dx = self.dim_x();
        if dx == 0 {
            return Err(Error::ShapeMismatch("state dimension must be positive".into()));
        }
        if self.x_cov.len() != dx || self.x_cov.iter().any(|r| r.len() != dx) {
            return Err(Error::ShapeMismatch(format!("x_cov must be {dx}×{dx}")));
        }
        if self.policy_gain.len() != dx || self.e.len() != dx {
            return Err(Error::ShapeMismatch(format!("policy_gain and e need {dx} entries")));
        }
        for (name, v) in [
            ("view_noise", self.view_noise),
            ("action_noise", self.action_noise),
            ("outcome_noise", self.outcome_noise),
            ("sensor_noise", self.sensor_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidTable(format!("{name} must be a finite non-negative std")));
            }
        }
        if self.train_sizes.is_empty() || self.train_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTable("train_sizes must be non-empty and strictly ascending".into()));
        }
        if self.train_sizes[0] < 2 || self.test_size == 0 {
            return Err(Error::InvalidTable("need at least two training rows and one test row".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidTable("repetitions must be at least 1".into()));
        }
        self.x_cov_matrix().cholesky().ok_or_else(|| Error::InvalidTable("x_cov is not positive definite".into()))?;
        Ok(())
    }

    fn x_cov_matrix(&self) -> DMatrix<f64> {
        let dx = self.dim_x();
        DMatrix::from_fn(dx, dx, |r, c| self.x_cov[r][c])
    }

    /// Sensor matrix `F` as configured.
    pub fn sensor_matrix(&self) -> DMatrix<f64> {
        let dx = self.dim_x();
        match self.sensor {
            SensorSpec::Identity => DMatrix::identity(dx, dx),
            SensorSpec::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                loop {
                    let f = DMatrix::from_fn(dx, dx, |_, _| rng.sample::<f64, _>(StandardNormal));
                    if condition_number(&f) <= SENSOR_CONDITION_LIMIT {
                        return f;
                    }
                }
            }
        }
    }

    /// Ground-truth model `(F, Σ_NN, D, E, Σ_OO)`.
    pub fn model(&self) -> Result<LinearGaussianModel> {
        let dx = self.dim_x();
        LinearGaussianModel::new(
            self.sensor_matrix(),
            DMatrix::identity(dx, dx) * self.sensor_noise.powi(2),
            DMatrix::from_element(1, 1, self.d),
            DMatrix::from_row_slice(1, dx, &self.e),
            DMatrix::from_element(1, 1, self.outcome_noise.powi(2)),
        )
    }

    /// Population covariance of `(A, X)`, action first.
    pub fn policy_cov(&self) -> DMatrix<f64> {
        let dx = self.dim_x();
        let xx = self.x_cov_matrix();
        let k = DMatrix::from_row_slice(1, dx, &self.policy_gain);
        let aa = &k * (&xx + DMatrix::identity(dx, dx) * self.view_noise.powi(2)) * k.transpose();
        let ax = &k * &xx;
        let mut cov = DMatrix::zeros(dx + 1, dx + 1);
        cov[(0, 0)] = aa[(0, 0)] + self.action_noise.powi(2);
        cov.view_mut((0, 1), (1, dx)).copy_from(&ax);
        cov.view_mut((1, 0), (dx, 1)).copy_from(&ax.transpose());
        cov.view_mut((1, 1), (dx, dx)).copy_from(&xx);
        cov
    }

    /// Column layout of the training sample: `z0`, `a0`, `y0..`.
    pub fn train_columns(&self) -> LinearColumns {
        LinearColumns::indexed(1, 1, self.dim_x())
    }

    /// State columns of the test sample: `x0..`.
    pub fn state_columns(&self) -> Vec<String> {
        (0..self.dim_x()).map(|i| format!("x{i}")).collect()
    }
}

/// Output of [`generate_carfollow`].
#[derive(Debug, Clone)]
pub struct CarFollowData {
    /// Spectator rows `(z0, a0, y0..)`, as many as the largest train size.
    pub train: SampleSet,
    /// Fully observed rows `(z0, a0, x0..)`.
    pub test: SampleSet,
    pub model: LinearGaussianModel,
    pub policy_cov: DMatrix<f64>,
}

struct Draw {
    z: f64,
    a: f64,
    x: DVector<f64>,
    y: DVector<f64>,
}

fn std_normal(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn draw(config: &CarFollowConfig, f: &DMatrix<f64>, chol: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> Draw {
    let dx = config.dim_x();
    let mean = DVector::from_column_slice(&config.x_mean);
    let x = &mean + chol * std_normal(rng, dx);
    let k = DVector::from_column_slice(&config.policy_gain);
    let view = &x + std_normal(rng, dx) * config.view_noise;
    let a = k.dot(&view) + config.action_noise * rng.sample::<f64, _>(StandardNormal);
    let e = DVector::from_column_slice(&config.e);
    let z = config.d * a + e.dot(&x) + config.outcome_noise * rng.sample::<f64, _>(StandardNormal);
    let y = f * &x + std_normal(rng, dx) * config.sensor_noise;
    Draw { z, a, x, y }
}

fn with_prefix(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// Draws the training and test samples for one seed.
pub fn generate_carfollow(config: &CarFollowConfig, seed: u64) -> Result<CarFollowData> {
    config.validate()?;
    let dx = config.dim_x();
    let model = config.model()?;
    let chol = config.x_cov_matrix().cholesky().expect("validated").l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_train = *config.train_sizes.last().expect("validated");

    let train_rows = (0..n_train)
        .map(|_| {
            let d = draw(config, &model.f, &chol, &mut rng);
            let mut row = vec![d.z, d.a];
            row.extend(d.y.iter());
            row
        })
        .collect();
    let test_rows = (0..config.test_size)
        .map(|_| {
            let d = draw(config, &model.f, &chol, &mut rng);
            let mut row = vec![d.z, d.a];
            row.extend(d.x.iter());
            row
        })
        .collect();

    let head = ["z0".to_string(), "a0".to_string()];
    let train = SampleSet::new(head.iter().cloned().chain(with_prefix("y", dx)).collect(), train_rows)?;
    let test = SampleSet::new(head.iter().cloned().chain(with_prefix("x", dx)).collect(), test_rows)?;
    Ok(CarFollowData { train, test, policy_cov: config.policy_cov(), model })
}
