//! Command-line front end. Every command reads an optional JSON config,
//! writes a JSON or CSV report to stdout (or `<out>/report.<ext>`), and maps
//! errors to exit code 1 (infeasible or numerical) or 2 (bad input).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::action_effect::{average_proxy, discrete_effect_solution_set, effect_bounds_table};
use crate::audit::audit_bounds;
use crate::error::{Error, Result};
use crate::experiments::{default_probes, run_carfollow, run_driving};
use crate::identify::{enumerate_solution_vertices, EnumerationOptions, IdentificationSystem, SystemJson};
use crate::imitation::{bound_case1, bound_case2, proxy_case1, proxy_case2, proxy_case3, Policy};
use crate::prob::{ConditionalTable, JointTable, ZeroHandling};
use crate::sim::{CarFollowConfig, DrivingSceneConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "sensorshift", version, about = "Transfer of action-effects and policies across sensor-shift")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON input; a top-level `seed` field is used when --seed is absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for `report.json` / `report.csv`; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Add wall-clock seconds to JSON reports.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vertices of the solution set of `{"sensor": [[..]], "rhs": [..]}`.
    Identify,
    /// Action-effect identification.
    ActionEffect {
        #[arg(long, value_enum)]
        mode: EffectMode,
    },
    /// Demonstrator-policy transfer.
    Imitate {
        #[arg(long, value_enum)]
        case: ImitateCase,
    },
    /// Randomized checks of the gap bounds.
    AuditBounds {
        #[arg(long, default_value_t = 200)]
        n_models: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EffectMode {
    /// Per-cell bounds from `{joint, sensor, outcome, action}`.
    Discrete,
    /// Car-following MSE curves; config is a car-following config.
    Linear,
    /// Average-based proxy from `{joint, sensor, outcome, action}`.
    Proxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImitateCase {
    /// Driving-scene probe table; config is a driving-scene config.
    #[value(name = "exact")]
    Exact,
    /// `{joint, action, demo, spectator}`.
    #[value(name = "1")]
    One,
    /// `{policy, back_channel, p_yt}`.
    #[value(name = "2")]
    Two,
    /// `{policy, sensor, posterior}`.
    #[value(name = "3")]
    Three,
}

/// Envelope of every JSON report.
#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectInput {
    /// Over `(outcome, action, Y_S...)`.
    joint: JointTable,
    /// `P(Y_S | X)`.
    sensor: ConditionalTable,
    outcome: String,
    action: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Case1Input {
    joint: JointTable,
    action: Vec<String>,
    demo: Vec<String>,
    spectator: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Case2Input {
    /// `P_S(A | Y_S)`.
    policy: ConditionalTable,
    /// `P(Y_S | Y_T)`.
    back_channel: ConditionalTable,
    p_yt: Option<JointTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Case3Input {
    policy: ConditionalTable,
    /// `P(Y_S | X)`.
    sensor: ConditionalTable,
    /// `P(X | Y_T)`.
    posterior: ConditionalTable,
}

#[derive(Debug, Serialize)]
struct ProxyPolicyReport {
    policy: Policy,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<Value>,
}

/// Rendered output of a command.
struct Output {
    json: Value,
    csv: String,
}

fn read_config(path: Option<&Path>) -> Result<Option<Value>> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path)?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Removes a top-level `seed` so configs with unknown-field checks accept it.
fn take_seed(config: &mut Option<Value>) -> Option<u64> {
    config.as_mut()?.as_object_mut()?.remove("seed")?.as_u64()
}

fn parse<T: DeserializeOwned + Default>(config: &Option<Value>) -> Result<T> {
    match config {
        Some(v) => Ok(serde_json::from_value(v.clone())?),
        None => Ok(T::default()),
    }
}

fn require<T: DeserializeOwned>(config: &Option<Value>, what: &str) -> Result<T> {
    match config {
        Some(v) => Ok(serde_json::from_value(v.clone())?),
        None => Err(Error::InvalidTable(format!("{what} needs --config"))),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn names(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn policy_csv(p: &Policy) -> String {
    let t = p.table();
    let mut out = String::from("observation,action,prob\n");
    for y in 0..t.cols() {
        for a in 0..t.rows() {
            out.push_str(&format!(
                "\"{}\",\"{}\",{}\n",
                t.space_in().describe(y),
                t.space_out().describe(a),
                t.matrix()[(a, y)]
            ));
        }
    }
    out
}

fn run_identify(config: &Option<Value>) -> Result<Output> {
    let raw: SystemJson = require(config, "identify")?;
    let sys = IdentificationSystem::from_json(&raw)?;
    let polytope = enumerate_solution_vertices(&sys, &EnumerationOptions::default())?;
    let json = polytope.to_json();
    let mut csv = (0..json.dimension).map(|i| format!("v{i}")).collect::<Vec<_>>().join(",") + "\n";
    for v in &json.vertices {
        csv.push_str(&v.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    Ok(Output { json: to_value(&json), csv })
}

fn run_effect(mode: EffectMode, config: &Option<Value>, seed: u64) -> Result<Output> {
    match mode {
        EffectMode::Linear => {
            let cfg: CarFollowConfig = parse(config)?;
            let report = run_carfollow(&cfg, seed)?;
            Ok(Output { json: to_value(&report), csv: report.to_csv() })
        }
        EffectMode::Discrete => {
            let input: EffectInput = require(config, "discrete mode")?;
            let sets = discrete_effect_solution_set(
                &input.joint,
                &input.sensor,
                &input.outcome,
                &input.action,
                &EnumerationOptions::default(),
            )?;
            let rows = effect_bounds_table(&sets)?;
            let mut csv = String::from("z,x,a,lower,upper\n");
            for r in &rows {
                csv.push_str(&format!("\"{}\",\"{}\",\"{}\",{},{}\n", r.z, r.x, r.a, r.lower, r.upper));
            }
            Ok(Output { json: to_value(&rows), csv })
        }
        EffectMode::Proxy => {
            let input: EffectInput = require(config, "proxy mode")?;
            let mut given = vec![input.action.as_str()];
            let observed = input.sensor.space_out().names();
            given.extend(&observed);
            let cond = input.joint.condition(&given, ZeroHandling::Error)?;
            let proxy = average_proxy(&cond, &input.sensor)?;
            let mut csv = String::from("outcome,given,prob\n");
            for c in 0..proxy.cols() {
                for r in 0..proxy.rows() {
                    csv.push_str(&format!(
                        "\"{}\",\"{}\",{}\n",
                        proxy.space_out().describe(r),
                        proxy.space_in().describe(c),
                        proxy.matrix()[(r, c)]
                    ));
                }
            }
            Ok(Output { json: to_value(&proxy), csv })
        }
    }
}

fn run_imitate(case: ImitateCase, config: &Option<Value>, seed: u64) -> Result<Output> {
    let (policy, bound) = match case {
        ImitateCase::Exact => {
            let cfg: DrivingSceneConfig = parse(config)?;
            let report = run_driving(&cfg, seed, &default_probes())?;
            return Ok(Output { json: to_value(&report), csv: report.to_csv() });
        }
        ImitateCase::One => {
            let input: Case1Input = require(config, "case 1")?;
            let (a, d, s) = (names(&input.action), names(&input.demo), names(&input.spectator));
            let mut a_s = a.clone();
            a_s.extend(&s);
            let p_a_ys = input.joint.marginalize(&a_s)?.condition(&s, ZeroHandling::Error)?;
            let mut s_d = s.clone();
            s_d.extend(&d);
            let channel = input.joint.marginalize(&s_d)?.condition(&d, ZeroHandling::Error)?;
            let policy = proxy_case1(&p_a_ys, &channel)?;
            let bound = bound_case1(&input.joint, &a, &d, &s)?;
            (policy, Some(to_value(&bound)))
        }
        ImitateCase::Two => {
            let input: Case2Input = require(config, "case 2")?;
            let policy = proxy_case2(&input.policy, &input.back_channel)?;
            let bound = match &input.p_yt {
                Some(p_yt) => Some(Value::from(bound_case2(&input.policy, &input.back_channel, p_yt)?)),
                None => None,
            };
            (policy, bound)
        }
        ImitateCase::Three => {
            let input: Case3Input = require(config, "case 3")?;
            (proxy_case3(&input.policy, &input.sensor, &input.posterior)?, None)
        }
    };
    let csv = policy_csv(&policy);
    Ok(Output { json: to_value(&ProxyPolicyReport { policy, bound }), csv })
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Identify => "identify".into(),
        Command::ActionEffect { mode } => format!("action-effect --mode {}", mode.to_possible_value().expect("value").get_name()),
        Command::Imitate { case } => format!("imitate --case {}", case.to_possible_value().expect("value").get_name()),
        Command::AuditBounds { n_models } => format!("audit-bounds --n-models {n_models}"),
    }
}

/// Runs a parsed command and returns the rendered report.
pub fn execute(cli: &Cli) -> Result<String> {
    let start = Instant::now();
    let mut config = read_config(cli.common.config.as_deref())?;
    let seed = cli.common.seed.or(take_seed(&mut config)).unwrap_or(DEFAULT_SEED);
    let output = match &cli.command {
        Command::Identify => run_identify(&config)?,
        Command::ActionEffect { mode } => run_effect(*mode, &config, seed)?,
        Command::Imitate { case } => run_imitate(*case, &config, seed)?,
        Command::AuditBounds { n_models } => {
            let report = audit_bounds(*n_models, seed)?;
            Output { json: to_value(&report), csv: report.to_csv() }
        }
    };
    let text = match cli.common.format {
        Format::Csv => output.csv,
        Format::Json => {
            let report = ExperimentReport {
                command: command_name(&cli.command),
                config: config.unwrap_or(Value::Null),
                seed,
                result: output.json,
                wall_clock_s: cli.common.timing.then(|| start.elapsed().as_secs_f64()),
            };
            serde_json::to_string_pretty(&report)? + "\n"
        }
    };
    Ok(text)
}

/// Parses `args`, runs, writes the report; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(&cli).and_then(|text| match &cli.common.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let ext = match cli.common.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            fs::write(dir.join(format!("report.{ext}")), text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_FAILURE
            }
        }
    }
}
