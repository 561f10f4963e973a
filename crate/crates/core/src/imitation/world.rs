use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::policy::Policy;
use crate::error::{Error, Result};
use crate::prob::{kl_vectors, ConditionalTable, JointTable, VariableSpace};

/// Which observation channel drives the acting agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Demonstrator acting on `Y_D`.
    Source,
    /// Target agent acting on `Y_T`.
    Target,
}

/// State prior, the three sensors and the action-effect of a discrete world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub p_x: JointTable,
    /// `P(Y_S | X)`, the spectator.
    pub sensor_s: ConditionalTable,
    /// `P(Y_D | X)`, the demonstrator.
    pub sensor_d: ConditionalTable,
    /// `P(Y_T | X)`, the target agent.
    pub sensor_t: ConditionalTable,
    /// `P(Z | A, X)` with input space `(A, X)`.
    pub effect: ConditionalTable,
}

impl WorldModel {
    pub fn new(
        p_x: JointTable,
        sensor_s: ConditionalTable,
        sensor_d: ConditionalTable,
        sensor_t: ConditionalTable,
        effect: ConditionalTable,
    ) -> Result<Self> {
        let w = Self { p_x, sensor_s, sensor_d, sensor_t, effect };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let x = self.p_x.space();
        for (name, s) in [("P(Y_S|X)", &self.sensor_s), ("P(Y_D|X)", &self.sensor_d), ("P(Y_T|X)", &self.sensor_t)] {
            if s.space_in() != x {
                return Err(Error::ShapeMismatch(format!("{name} does not take the state space as input")));
            }
        }
        let expected = self.action_space()?.concat(x)?;
        if self.effect.space_in() != &expected {
            return Err(Error::ShapeMismatch("action-effect input must be (A, X) with X last".into()));
        }
        Ok(())
    }

    pub fn state_space(&self) -> &VariableSpace {
        self.p_x.space()
    }

    /// Effect inputs other than the state variables.
    pub fn action_space(&self) -> Result<VariableSpace> {
        let state = self.p_x.space().names();
        let names: Vec<&str> = self.effect.space_in().names().into_iter().filter(|n| !state.contains(n)).collect();
        if names.is_empty() {
            return Err(Error::ShapeMismatch("action-effect has no action inputs".into()));
        }
        self.effect.space_in().subspace(&names)
    }

    pub fn outcome_space(&self) -> &VariableSpace {
        self.effect.space_out()
    }

    fn sensor(&self, domain: Domain) -> &ConditionalTable {
        match domain {
            Domain::Source => &self.sensor_d,
            Domain::Target => &self.sensor_t,
        }
    }

    /// Source-domain observation marginal `P(O)` for the given sensor.
    pub fn observation_marginal(&self, sensor: &ConditionalTable) -> Vec<f64> {
        let px = nalgebra::DVector::from_column_slice(self.p_x.probs());
        sensor.push_forward(&px).iter().copied().collect()
    }

    /// `P_S(A, Y_D, Y_S) = Σ_x p(x) p(y_D|x) p(y_S|x) π_D(a|y_D)`.
    pub fn source_joint(&self, pi_d: &Policy) -> Result<JointTable> {
        let action = self.action_space()?;
        if pi_d.observation_space() != self.sensor_d.space_out() || pi_d.action_space() != &action {
            return Err(Error::ShapeMismatch("demonstrator policy does not act on Y_D".into()));
        }
        let space = action.concat(self.sensor_d.space_out())?.concat(self.sensor_s.space_out())?;
        let (nd, ns) = (self.sensor_d.rows(), self.sensor_s.rows());
        let sd = self.sensor_d.matrix();
        let ss = self.sensor_s.matrix();
        let mut probs = vec![0.0; space.cardinality()];
        for (x, &px) in self.p_x.probs().iter().enumerate() {
            for d in 0..nd {
                for s in 0..ns {
                    let w = px * sd[(d, x)] * ss[(s, x)];
                    for a in 0..action.cardinality() {
                        probs[(a * nd + d) * ns + s] += w * pi_d.prob(a, d);
                    }
                }
            }
        }
        JointTable::new(space, probs)
    }
}

/// `P(A, Z | X)` when acting with `policy` on the chosen domain's sensor:
/// `p(a, z | x) = Σ_o p(o|x) π(a|o) p(z|a,x)`.
pub fn induced_behavior(world: &WorldModel, policy: &Policy, domain: Domain) -> Result<ConditionalTable> {
    let sensor = world.sensor(domain);
    let action = world.action_space()?;
    if policy.observation_space() != sensor.space_out() {
        return Err(Error::ShapeMismatch(format!("policy observes {:?}, the sensor emits {:?}", policy.observation_space().names(), sensor.space_out().names())));
    }
    if policy.action_space() != &action {
        return Err(Error::ShapeMismatch("policy action space differs from the action-effect".into()));
    }
    let nx = world.state_space().cardinality();
    let na = action.cardinality();
    let nz = world.outcome_space().cardinality();
    let s = sensor.matrix();
    let eff = world.effect.matrix();
    let mut m = DMatrix::zeros(na * nz, nx);
    for x in 0..nx {
        for a in 0..na {
            let pa: f64 = (0..sensor.rows()).map(|o| s[(o, x)] * policy.prob(a, o)).sum();
            for z in 0..nz {
                m[(a * nz + z, x)] = pa * eff[(z, a * nx + x)];
            }
        }
    }
    crate::prob::renormalize_columns(&mut m);
    ConditionalTable::new(world.state_space().clone(), action.concat(world.outcome_space())?, m)
}

/// `Σ_x w(x) D(P_T(A,Z|x) ‖ P_S(A,Z|x))`, with the target acting on `Y_T`
/// via `pi_t` and the demonstrator on `Y_D` via `pi_d`.
pub fn behavior_kl(world: &WorldModel, pi_t: &Policy, pi_d: &Policy, weight: &JointTable) -> Result<f64> {
    if weight.space() != world.state_space() {
        return Err(Error::ShapeMismatch("weights must be a table over the state".into()));
    }
    let target = induced_behavior(world, pi_t, Domain::Target)?;
    let source = induced_behavior(world, pi_d, Domain::Source)?;
    let mut total = 0.0;
    for (x, &w) in weight.probs().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = target.column(x);
        let q = source.column(x);
        total += w * kl_vectors(p.as_slice(), q.as_slice()).map_err(|e| match e {
            Error::SupportViolation { cell } => Error::SupportViolation {
                cell: format!("{} at {}", world.state_space().describe(x), cell),
            },
            other => other,
        })?;
    }
    Ok(total)
}
