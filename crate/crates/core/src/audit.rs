//! Randomized audits of the information-theoretic guarantees on small
//! discrete models: the average-proxy gap against `I(X;Z|A,Y_S)`, exactness
//! of transfer under matched sensors, the case-1 proxy chain and behavior
//! bound, and the deterministic-back-channel case of the case-2 proxy.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::action_effect::proxy_gap_bound;
use crate::error::Result;
use crate::imitation::{behavior_kl, bound_case1, bound_case2, policy_kl, proxy_case1, proxy_case2, Policy, WorldModel};
use crate::prob::{ConditionalTable, JointTable, MaxEntropyOptions, Variable, VariableSpace, ZeroHandling};

/// Slack on inequalities between exactly computed quantities.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Extra slack when comparing to the numerically maximized entropy cap.
pub const MAXENT_SLACK: f64 = 1e-3;
/// Tolerance for quantities that must vanish.
pub const ZERO_TOL: f64 = 1e-10;
/// Tolerance for policies that must coincide.
pub const POLICY_TOL: f64 = 1e-12;
/// Tolerance for the behavioral KL under matched sensors.
pub const MATCHED_TOL: f64 = 1e-12;

/// Which guarantee a row checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `gap ≤ I(X;Z|A,Y_S) ≤ max H(X|Y_S)`.
    ProxyGap,
    /// Injective spectator sensor: `gap = 0`.
    ProxyGapInjective,
    /// Matched sensors, `π_T = π_D`: behavioral KL = 0.
    MatchedTransfer,
    /// `D(π_D ‖ π̃) ≤ I(A;Y_D|Y_S) ≤ H(Y_D|Y_S)`.
    Case1Chain,
    /// Behavioral KL of `π̃` ≤ `D(π̃ ‖ π_D)`.
    Case1Behavior,
    /// Deterministic `Y_S = f(Y_T)`: bound is 0 and `π̃⁽²⁾ = P_S(A|f(y_T))`.
    Case2Deterministic,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::ProxyGap => "proxy-gap",
            Check::ProxyGapInjective => "proxy-gap-injective",
            Check::MatchedTransfer => "matched-transfer",
            Check::Case1Chain => "case1-chain",
            Check::Case1Behavior => "case1-behavior",
            Check::Case2Deterministic => "case2-deterministic",
        }
    }
}

/// One audited model. `value ≤ bound` (and `bound ≤ cap` when present) is
/// what `holds` records; for equality checks `bound` is the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub model_id: usize,
    pub check: Check,
    pub value: f64,
    pub bound: f64,
    pub cap: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub n_models: usize,
    pub seed: u64,
    pub rows: Vec<AuditRow>,
    pub violations: usize,
}

impl AuditReport {
    pub fn rows_for(&self, check: Check) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(move |r| r.check == check)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id,check,value,bound,cap,holds\n");
        for r in &self.rows {
            let cap = r.cap.map(|c| c.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{},{}\n", r.model_id, r.check.name(), r.value, r.bound, cap, r.holds));
        }
        out
    }
}

fn space(name: &str, n: usize) -> VariableSpace {
    VariableSpace::new(vec![Variable::indexed(name, n)]).expect("non-empty range")
}

/// Entries bounded away from zero, so every model has full support.
fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

fn random_channel(rng: &mut ChaCha8Rng, input: VariableSpace, output: VariableSpace) -> Result<ConditionalTable> {
    let (rows, cols) = (output.cardinality(), input.cardinality());
    let columns: Vec<Vec<f64>> = (0..cols).map(|_| random_simplex(rng, rows)).collect();
    ConditionalTable::new(input, output, DMatrix::from_fn(rows, cols, |r, c| columns[c][r]))
}

fn random_joint(rng: &mut ChaCha8Rng, space: VariableSpace) -> Result<JointTable> {
    let p = random_simplex(rng, space.cardinality());
    JointTable::new(space, p)
}

/// Random model over `(Z, A, X, Y)` following `Y ← X → A → Z ← X`.
fn random_effect_joint(rng: &mut ChaCha8Rng, injective: bool) -> Result<JointTable> {
    let p_x = random_simplex(rng, 2);
    let sensor: Vec<Vec<f64>> = if injective {
        vec![vec![1.0, 0.0], vec![0.0, 1.0]]
    } else {
        (0..2).map(|_| random_simplex(rng, 2)).collect()
    };
    let policy: Vec<Vec<f64>> = (0..2).map(|_| random_simplex(rng, 2)).collect();
    let effect: Vec<Vec<f64>> = (0..4).map(|_| random_simplex(rng, 2)).collect();
    let s = VariableSpace::new(vec![
        Variable::indexed("Z", 2),
        Variable::indexed("A", 2),
        Variable::indexed("X", 2),
        Variable::indexed("Y", 2),
    ])?;
    JointTable::from_fn(s, |m| {
        let (z, a, x, y) = (m[0], m[1], m[2], m[3]);
        p_x[x] * sensor[x][y] * policy[x][a] * effect[a * 2 + x][z]
    })
}

/// Random case-1 world: shared `Y_D`/`Y_T` sensor, independent spectator.
fn random_world(rng: &mut ChaCha8Rng) -> Result<(WorldModel, Policy)> {
    let nx = rng.random_range(2..=3);
    let nd = rng.random_range(2..=3);
    let ns = rng.random_range(2..=3);
    let x = space("X", nx);
    let a = space("A", 2);
    let p_x = random_joint(rng, x.clone())?;
    let sensor_s = random_channel(rng, x.clone(), space("YS", ns))?;
    let sensor_d = random_channel(rng, x.clone(), space("YD", nd))?;
    let effect = random_channel(rng, a.concat(&x)?, space("Z", 2))?;
    let pi_d = Policy::new(random_channel(rng, space("YD", nd), a)?);
    let world = WorldModel::new(p_x, sensor_s, sensor_d.clone(), sensor_d, effect)?;
    Ok((world, pi_d))
}

fn audit_proxy_gap(rng: &mut ChaCha8Rng, id: usize, rows: &mut Vec<AuditRow>) -> Result<()> {
    let options = MaxEntropyOptions::default();
    let j = random_effect_joint(rng, false)?;
    let b = proxy_gap_bound(&j, &["Z"], &["A"], &["X"], &["Y"], &options)?;
    rows.push(AuditRow {
        model_id: id,
        check: Check::ProxyGap,
        value: b.gap,
        bound: b.mi_bound,
        cap: Some(b.entropy_bound),
        holds: b.gap <= b.mi_bound + INEQUALITY_SLACK && b.mi_bound <= b.entropy_bound + MAXENT_SLACK,
    });
    let j = random_effect_joint(rng, true)?;
    let b = proxy_gap_bound(&j, &["Z"], &["A"], &["X"], &["Y"], &options)?;
    rows.push(AuditRow {
        model_id: id,
        check: Check::ProxyGapInjective,
        value: b.gap,
        bound: ZERO_TOL,
        cap: None,
        holds: b.gap.abs() <= ZERO_TOL,
    });
    Ok(())
}

fn audit_case1(rng: &mut ChaCha8Rng, id: usize, rows: &mut Vec<AuditRow>) -> Result<()> {
    let (world, pi_d) = random_world(rng)?;

    let matched = behavior_kl(&world, &pi_d, &pi_d, &world.p_x)?;
    rows.push(AuditRow {
        model_id: id,
        check: Check::MatchedTransfer,
        value: matched,
        bound: MATCHED_TOL,
        cap: None,
        holds: matched.abs() <= MATCHED_TOL,
    });

    let joint = world.source_joint(&pi_d)?;
    let chain = bound_case1(&joint, &["A"], &["YD"], &["YS"])?;
    rows.push(AuditRow {
        model_id: id,
        check: Check::Case1Chain,
        value: chain.kl,
        bound: chain.mi,
        cap: Some(chain.entropy),
        holds: chain.kl <= chain.mi + INEQUALITY_SLACK && chain.mi <= chain.entropy + INEQUALITY_SLACK,
    });

    let p_a_ys = joint.marginalize(&["A", "YS"])?.condition(&["YS"], ZeroHandling::Error)?;
    let channel = joint.marginalize(&["YS", "YD"])?.condition(&["YD"], ZeroHandling::Error)?;
    let proxy = proxy_case1(&p_a_ys, &channel)?;
    let behavior = behavior_kl(&world, &proxy, &pi_d, &world.p_x)?;
    let weights = world.observation_marginal(&world.sensor_d);
    let policy_gap = policy_kl(&proxy, &pi_d, &weights)?;
    rows.push(AuditRow {
        model_id: id,
        check: Check::Case1Behavior,
        value: behavior,
        bound: policy_gap,
        cap: None,
        holds: behavior <= policy_gap + INEQUALITY_SLACK,
    });
    Ok(())
}

fn audit_case2(rng: &mut ChaCha8Rng, id: usize, rows: &mut Vec<AuditRow>) -> Result<()> {
    let ns = rng.random_range(2..=3);
    let nt = rng.random_range(ns..=4);
    let na = rng.random_range(2..=3);
    let p = random_channel(rng, space("YS", ns), space("A", na))?;
    // surjective map y_T -> y_S
    let map: Vec<usize> = (0..nt).map(|t| if t < ns { t } else { rng.random_range(0..ns) }).collect();
    let back = ConditionalTable::new(
        space("YT", nt),
        space("YS", ns),
        DMatrix::from_fn(ns, nt, |s, t| if map[t] == s { 1.0 } else { 0.0 }),
    )?;
    let p_yt = random_joint(rng, space("YT", nt))?;
    let bound = bound_case2(&p, &back, &p_yt)?;
    let pooled = proxy_case2(&p, &back)?;
    let diff = (0..nt)
        .flat_map(|t| (0..p.rows()).map(move |a| (a, t)))
        .map(|(a, t)| (pooled.prob(a, t) - p.matrix()[(a, map[t])]).abs())
        .fold(0.0, f64::max);
    rows.push(AuditRow {
        model_id: id,
        check: Check::Case2Deterministic,
        value: bound,
        bound: ZERO_TOL,
        cap: Some(diff),
        holds: bound.abs() <= ZERO_TOL && diff <= POLICY_TOL,
    });
    Ok(())
}

/// Runs every check on `n_models` random models; each check family draws
/// from its own stream derived from `seed`.
pub fn audit_bounds(n_models: usize, seed: u64) -> Result<AuditReport> {
    let mut rows = Vec::new();
    let mut streams: Vec<ChaCha8Rng> = (0..3)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        })
        .collect();
    for id in 0..n_models {
        audit_proxy_gap(&mut streams[0], id, &mut rows)?;
        audit_case1(&mut streams[1], id, &mut rows)?;
        audit_case2(&mut streams[2], id, &mut rows)?;
    }
    let violations = rows.iter().filter(|r| !r.holds).count();
    Ok(AuditReport { n_models, seed, rows, violations })
}
