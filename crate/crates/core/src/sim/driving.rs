use nalgebra::DMatrix;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::estimate::{bin_index, gaussian_bin_channel};
use super::SampleSet;
use crate::error::{Error, Result};
use crate::imitation::Policy;
use crate::prob::{ConditionalTable, JointTable, Variable, VariableSpace};

/// Action values: slow down, keep, speed up (by one speed step).
pub const ACTIONS: [i32; 3] = [-1, 0, 1];

/// Two-lane scene where the demonstrator reacts to another vehicle's speed
/// `v_o` and indicator `b_o`, while the spectator only measures a noisy,
/// binned `v_o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrivingSceneConfig {
    pub speeds: Vec<f64>,
    /// Probability of speeding up (rather than keeping speed) when `b_o = 0`.
    pub q: f64,
    /// Std of the spectator's speed measurement.
    pub noise_std: f64,
    /// Inner bin edges run from `bin_low` to `bin_high` in steps of
    /// `bin_width`; the outer bins catch the tails.
    pub bin_width: f64,
    pub bin_low: f64,
    pub bin_high: f64,
    /// `P(v_o, b_o)` with `b_o` varying fastest; uniform when absent.
    pub observation_prior: Option<Vec<f64>>,
    pub sample_sizes: Vec<usize>,
    pub repetitions: usize,
}

impl Default for DrivingSceneConfig {
    fn default() -> Self {
        Self {
            speeds: vec![40.0, 45.0, 50.0, 55.0, 60.0],
            q: 0.5,
            noise_std: 0.5,
            bin_width: 2.5,
            bin_low: 37.5,
            bin_high: 62.5,
            observation_prior: None,
            sample_sizes: vec![100, 1_000, 10_000, 100_000],
            repetitions: 10,
        }
    }
}

impl DrivingSceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.speeds.is_empty() || self.speeds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidTable("speeds must be non-empty and strictly ascending".into()));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidTable(format!("q = {} is not a probability", self.q)));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidTable("noise_std must be finite and non-negative".into()));
        }
        if !(self.bin_width > 0.0) || !(self.bin_high >= self.bin_low) {
            return Err(Error::InvalidTable("need bin_width > 0 and bin_high >= bin_low".into()));
        }
        if let Some(p) = &self.observation_prior {
            let total: f64 = p.iter().sum();
            if p.len() != 2 * self.speeds.len() || p.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidTable("observation_prior must be a distribution over (v_o, b_o)".into()));
            }
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) || self.sample_sizes.first() == Some(&0) {
            return Err(Error::InvalidTable("sample_sizes must be positive and strictly ascending".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidTable("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        let steps = ((self.bin_high - self.bin_low) / self.bin_width + 1e-9).floor() as usize;
        (0..=steps).map(|i| self.bin_low + i as f64 * self.bin_width).collect()
    }
}

fn label(v: f64) -> String {
    format!("{v}")
}

/// Spaces, channel and demonstrator of a configured scene.
#[derive(Debug, Clone)]
pub struct DrivingScene {
    pub config: DrivingSceneConfig,
    /// `a` with labels `-1, 0, 1`.
    pub action: VariableSpace,
    /// `(v_o, b_o)`.
    pub demo: VariableSpace,
    /// `y_s`, labelled by bin index.
    pub spectator: VariableSpace,
    /// `P(y_s | v_o, b_o)`.
    pub channel: ConditionalTable,
    /// `π_D(a | v_o, b_o)`.
    pub pi_d: Policy,
    pub p_yd: JointTable,
    pub edges: Vec<f64>,
}

impl DrivingScene {
    pub fn new(config: DrivingSceneConfig) -> Result<Self> {
        config.validate()?;
        let edges = config.bin_edges();
        let action = VariableSpace::new(vec![Variable::new("a", ACTIONS.iter().map(|a| a.to_string()).collect())])?;
        let demo = VariableSpace::new(vec![
            Variable::new("v_o", config.speeds.iter().map(|&v| label(v)).collect()),
            Variable::new("b_o", vec!["0".into(), "1".into()]),
        ])?;
        let spectator = VariableSpace::new(vec![Variable::indexed("y_s", edges.len() + 1)])?;

        let means: Vec<f64> = config.speeds.iter().flat_map(|&v| [v, v]).collect();
        let binned = gaussian_bin_channel(&means, config.noise_std, &edges)?;
        let channel = binned.relabel(demo.clone(), spectator.clone())?;

        let q = config.q;
        let pi = DMatrix::from_fn(3, demo.cardinality(), |a, y| match (ACTIONS[a], y % 2) {
            (-1, 1) => 1.0,
            (1, 0) => q,
            (0, 0) => 1.0 - q,
            _ => 0.0,
        });
        let pi_d = Policy::from_matrix(demo.clone(), action.clone(), pi)?;
        let p_yd = match &config.observation_prior {
            Some(p) => JointTable::new(demo.clone(), p.clone())?,
            None => JointTable::uniform(demo.clone()),
        };
        Ok(Self { config, action, demo, spectator, channel, pi_d, p_yd, edges })
    }

    /// Flat `(v_o, b_o)` index.
    pub fn demo_index(&self, speed: usize, indicator: usize) -> usize {
        speed * 2 + indicator
    }

    pub fn speed_index(&self, v: f64) -> Option<usize> {
        self.config.speeds.iter().position(|&s| (s - v).abs() < 1e-9)
    }

    pub fn action_index(a: i32) -> Option<usize> {
        ACTIONS.iter().position(|&x| x == a)
    }

    /// Population `P_S(a, y_s)`.
    pub fn population_ays(&self) -> Result<JointTable> {
        let na = self.action.cardinality();
        let ns = self.spectator.cardinality();
        let mut probs = vec![0.0; na * ns];
        for (y, &py) in self.p_yd.probs().iter().enumerate() {
            for a in 0..na {
                let pa = py * self.pi_d.prob(a, y);
                for s in 0..ns {
                    probs[a * ns + s] += pa * self.channel.matrix()[(s, y)];
                }
            }
        }
        JointTable::new(self.action.concat(&self.spectator)?, probs)
    }

    /// `n` source-domain rows with columns `a, y_s, v_o, b_o`.
    pub fn sample(&self, seed: u64, n: usize) -> Result<SampleSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let observations = WeightedIndex::new(self.p_yd.probs()).map_err(|e| Error::InvalidTable(e.to_string()))?;
        let actions: Vec<WeightedIndex<f64>> = (0..self.demo.cardinality())
            .map(|y| WeightedIndex::new(self.pi_d.table().column(y).iter().copied()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidTable(e.to_string()))?;
        let rows = (0..n)
            .map(|_| {
                let y = observations.sample(&mut rng);
                let (speed, indicator) = (y / 2, y % 2);
                let a = actions[y].sample(&mut rng);
                let v = self.config.speeds[speed];
                let measured = v + self.config.noise_std * rng.sample::<f64, _>(StandardNormal);
                vec![ACTIONS[a] as f64, bin_index(&self.edges, measured) as f64, v, indicator as f64]
            })
            .collect();
        SampleSet::new(vec!["a".into(), "y_s".into(), "v_o".into(), "b_o".into()], rows)
    }
}

/// One seeded sample of `n` rows from the scene built from `config`.
pub fn generate_driving_scene(config: &DrivingSceneConfig, seed: u64, n: usize) -> Result<(DrivingScene, SampleSet)> {
    let scene = DrivingScene::new(config.clone())?;
    let sample = scene.sample(seed, n)?;
    Ok((scene, sample))
}
