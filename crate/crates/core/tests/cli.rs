use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sensorshift")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn var(name: &str, n: usize) -> Value {
    json!({"name": name, "range": (0..n).map(|i| i.to_string()).collect::<Vec<_>>()})
}

#[test]
fn identify_identity_sensor_gives_one_vertex() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sys.json", &json!({"sensor": [[1.0, 0.0], [0.0, 1.0]], "rhs": [0.3, 0.2]}));
    let v = stdout_json(&run(&["identify", "--config", &cfg]));
    assert_eq!(v["command"], "identify");
    assert_eq!(v["result"]["vertices"], json!([[0.3, 0.2]]));
    assert_eq!(v["result"]["dimension"], 2);
}

#[test]
fn identify_constant_sensor_gives_two_vertices() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sys.json", &json!({"sensor": [[1.0, 1.0]], "rhs": [0.4]}));
    let (header, rows) = csv_rows(&run(&["identify", "--config", &cfg, "--format", "csv"]));
    assert_eq!(header, ["v0", "v1"]);
    let mut vs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    vs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(vs, [(0.0, 0.4), (0.4, 0.0)]);
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"sensor\": [[1.0]").unwrap();
    let o = run(&["identify", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("EOF"));
}

#[test]
fn infeasible_system_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sys.json", &json!({"sensor": [[0.9, 0.1], [0.1, 0.9]], "rhs": [0.0, 0.5]}));
    assert_eq!(run(&["identify", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn unknown_flags_and_missing_files_are_input_errors() {
    assert_eq!(run(&["identify", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["identify", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
    assert_eq!(run(&["imitate", "--case", "7"]).status.code(), Some(2));
}

#[test]
fn audit_with_no_models_is_empty() {
    let v = stdout_json(&run(&["audit-bounds", "--n-models", "0"]));
    assert_eq!(v["result"]["rows"], json!([]));
    assert_eq!(v["result"]["violations"], 0);
}

#[test]
fn audit_is_deterministic_and_clean() {
    let a = run(&["audit-bounds", "--n-models", "20", "--seed", "3", "--format", "csv"]);
    let b = run(&["audit-bounds", "--n-models", "20", "--seed", "3", "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
    let (header, rows) = csv_rows(&a);
    assert_eq!(header, ["model_id", "check", "value", "bound", "cap", "holds"]);
    assert_eq!(rows.len(), 120);
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn out_dir_and_timing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("reports");
    let o = run(&["audit-bounds", "--n-models", "1", "--out", out.to_str().unwrap(), "--timing"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(v["wall_clock_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["seed"], 0);
}

fn effect_fixture(sensor: Value) -> Value {
    // P(Z, A, Y) with Z, A, Y binary
    json!({
        "joint": {"variables": [var("Z", 2), var("A", 2), var("Y", 2)],
                  "probs": [0.1, 0.15, 0.05, 0.2, 0.2, 0.1, 0.15, 0.05]},
        "sensor": sensor,
        "outcome": "Z",
        "action": "A",
    })
}

#[test]
fn proxy_with_identity_sensor_is_the_conditional() {
    let dir = TempDir::new().unwrap();
    let sensor = json!({"input": [var("X", 2)], "output": [var("Y", 2)], "matrix": [[1.0, 0.0], [0.0, 1.0]]});
    let cfg = write(dir.path(), "in.json", &effect_fixture(sensor));
    let v = stdout_json(&run(&["action-effect", "--mode", "proxy", "--config", &cfg]));
    let m = &v["result"]["matrix"];
    // P(Z=0 | A=0, Y=0) = 0.1 / (0.1 + 0.2)
    let p = m[0][0].as_f64().unwrap();
    assert!((p - 0.1 / 0.3).abs() < 1e-12);
    let q = m[0][3].as_f64().unwrap();
    assert!((q - 0.2 / 0.25).abs() < 1e-12);
}

#[test]
fn discrete_bounds_contain_the_truth() {
    let dir = TempDir::new().unwrap();
    let sensor = [[0.8, 0.3, 0.5], [0.2, 0.7, 0.5]];
    // true P(z, a, x), z-major
    let truth = [0.05, 0.1, 0.05, 0.1, 0.05, 0.1, 0.15, 0.05, 0.1, 0.05, 0.15, 0.05];
    let mut probs = Vec::new();
    for za in 0..4 {
        for s_row in &sensor {
            probs.push((0..3).map(|x| s_row[x] * truth[za * 3 + x]).sum::<f64>());
        }
    }
    let cfg = write(
        dir.path(),
        "in.json",
        &json!({
            "joint": {"variables": [var("Z", 2), var("A", 2), var("Y", 2)], "probs": probs},
            "sensor": {"input": [var("X", 3)], "output": [var("Y", 2)], "matrix": sensor},
            "outcome": "Z",
            "action": "A",
        }),
    );
    let (header, rows) = csv_rows(&run(&["action-effect", "--mode", "discrete", "--config", &cfg, "--format", "csv"]));
    assert_eq!(header, ["z", "x", "a", "lower", "upper"]);
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let label = |s: &str| s.rsplit('=').next().unwrap().parse::<usize>().unwrap();
        let (z, x, a) = (label(&r[0]), label(&r[1]), label(&r[2]));
        let (lo, hi): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        let p = truth[(z * 2 + a) * 3 + x] / (truth[a * 3 + x] + truth[(2 + a) * 3 + x]);
        assert!(lo <= p + 1e-9 && p <= hi + 1e-9, "{r:?} vs {p}");
        assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
    }
}

#[test]
fn linear_mode_small_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cf.json",
        &json!({"seed": 4, "train_sizes": [500, 2000], "test_size": 200, "repetitions": 3}),
    );
    let o = run(&["action-effect", "--mode", "linear", "--config", &cfg]);
    let v = stdout_json(&o);
    assert_eq!(v["seed"], 4);
    assert_eq!(v["result"]["sizes"], json!([500, 2000]));
    let curves = v["result"]["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 3);
    assert!(curves.iter().all(|c| c["mean"].as_array().unwrap().len() == 2));
}

#[test]
fn imitate_exact_reports_the_probe_cells() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "scene.json", &json!({"sample_sizes": [200, 2000], "repetitions": 2}));
    let (header, rows) = csv_rows(&run(&["imitate", "--case", "exact", "--config", &cfg, "--format", "csv"]));
    assert_eq!(header[..2], ["size", "probe"]);
    let probes: std::collections::BTreeSet<_> = rows.iter().map(|r| r[1].clone()).collect();
    let expected: std::collections::BTreeSet<String> = ["(1|50,0)", "(1|50,1)", "(-1|50,1)"].iter().map(|s| s.to_string()).collect();
    assert_eq!(probes, expected);
    assert_eq!(rows.len(), 6);
}

#[test]
fn imitate_case1_identity_channel_is_exact() {
    let dir = TempDir::new().unwrap();
    // Y_S copies Y_D
    let pi = [[0.7, 0.2], [0.3, 0.8]];
    let p_y = [0.4, 0.6];
    let mut probs = Vec::new();
    for a in 0..2 {
        for yd in 0..2 {
            for ys in 0..2 {
                probs.push(if yd == ys { pi[a][yd] * p_y[yd] } else { 0.0 });
            }
        }
    }
    let cfg = write(
        dir.path(),
        "c1.json",
        &json!({
            "joint": {"variables": [var("A", 2), var("YD", 2), var("YS", 2)], "probs": probs},
            "action": ["A"], "demo": ["YD"], "spectator": ["YS"],
        }),
    );
    let v = stdout_json(&run(&["imitate", "--case", "1", "--config", &cfg]));
    let m = &v["result"]["policy"]["matrix"];
    for a in 0..2 {
        for y in 0..2 {
            assert!((m[a][y].as_f64().unwrap() - pi[a][y]).abs() < 1e-12);
        }
    }
    assert!(v["result"]["bound"]["kl"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn imitate_case2_deterministic_back_channel_has_zero_bound() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c2.json",
        &json!({
            "policy": {"input": [var("YS", 2)], "output": [var("A", 2)], "matrix": [[0.9, 0.4], [0.1, 0.6]]},
            "back_channel": {"input": [var("YT", 3)], "output": [var("YS", 2)], "matrix": [[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]},
            "p_yt": {"variables": [var("YT", 3)], "probs": [0.2, 0.5, 0.3]},
        }),
    );
    let v = stdout_json(&run(&["imitate", "--case", "2", "--config", &cfg]));
    assert!(v["result"]["bound"].as_f64().unwrap().abs() <= 1e-10);
    let m = &v["result"]["policy"]["matrix"];
    assert!((m[0][2].as_f64().unwrap() - 0.9).abs() <= 1e-12);
    assert!((m[1][1].as_f64().unwrap() - 0.6).abs() <= 1e-12);
}

#[test]
fn help_lists_the_flags() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--config", "--seed", "--out", "--format", "audit-bounds", "action-effect", "imitate", "identify"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}
