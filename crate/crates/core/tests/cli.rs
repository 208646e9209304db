use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

fn regcon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regcon")).args(args).output().unwrap()
}

fn run_config(dir: &Path, config: Value, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_vec_pretty(&config).unwrap()).unwrap();
    let mut args = vec!["run", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    regcon(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

/// Every file except the manifest is listed with a matching checksum.
fn assert_manifest_complete(dir: &Path) {
    let manifest = read_json(&dir.join("manifest.json"));
    let mut listed: Vec<String> = Vec::new();
    for f in manifest["files"].as_array().unwrap() {
        let name = f["name"].as_str().unwrap();
        let bytes = fs::read(dir.join(name)).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{name}");
        listed.push(name.to_string());
    }
    listed.push("manifest.json".into());
    listed.sort();
    assert_eq!(listed, listing(dir));
}

#[test]
fn plateau_pr4pc_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_config(
        tmp.path(),
        json!({
            "instance": {"name": "plateau"},
            "command": "pr4pc",
            "params": {
                "theta": [0.0],
                "strategy": {"kind": "log_grid", "lo": 0.25, "hi": 4.0, "count": 9},
                "solver": {"kind": "grid", "points_per_dim": 2001}
            },
            "output_dir": out,
        }),
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_manifest_complete(&out);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "iter,lambda_0,w_0,loss,c_0,stored");
    assert_eq!(lines.len(), 10);
    let result = read_json(&out.join("result.json"));
    assert_eq!(result["winner_result"]["loss"], json!(1.0));
    assert_eq!(result["status"], json!("found"));
    for name in ["curve-violation.dat", "curve-loss.dat"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        for line in text.lines().skip(1) {
            let cols: Vec<f64> = line.split(' ').map(|x| x.parse().unwrap()).collect();
            assert_eq!(cols.len(), 2);
        }
    }
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["command"], json!("pr4pc"));
    assert!(manifest["config"].get("output_dir").is_none());
}

#[test]
fn log_unbounded_reports_no_multiplier() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_config(
        tmp.path(),
        json!({
            "instance": {"name": "log_unbounded"},
            "command": "pr4pc",
            "params": {
                "theta": [1.0],
                "strategy": {"kind": "log_grid", "lo": 1e-3, "hi": 1e3, "count": 25},
                "solver": {"kind": "grid", "points_per_dim": 10001}
            },
            "output_dir": out,
        }),
        &[],
    );
    assert_eq!(o.status.code(), Some(4));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["kind"], json!("feasibility_unmet"));
    let result = read_json(&out.join("result.json"));
    assert_eq!(result["stored"], json!([]));
    assert_eq!(result["status"], json!("no_multiplier_found"));
    assert_manifest_complete(&out);
}

#[test]
fn unknown_instance_leaves_only_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_config(
        tmp.path(),
        json!({
            "instance": {"name": "no_such_instance"},
            "command": "solve-pr",
            "params": {"lambda": [1.0]},
            "output_dir": out,
        }),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["kind"], json!("config_error"));
    assert_eq!(listing(&out), vec!["diagnostic.json"]);
}

#[test]
fn unknown_parameter_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_config(
        tmp.path(),
        json!({
            "instance": {"name": "plateau"},
            "command": "solve-pr",
            "params": {"lambda": [1.0], "grid_points": 5},
            "output_dir": out,
        }),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(listing(&out), vec!["diagnostic.json"]);
}

#[test]
fn budget_override_exceeded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_config(
        tmp.path(),
        json!({
            "instance": {"name": "ordered_regression"},
            "command": "solve-pr",
            "params": {"lambda": [1.0]},
            "output_dir": out,
        }),
        &["--budget", "1000"],
    );
    assert_eq!(o.status.code(), Some(3));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["kind"], json!("budget_exceeded"));
}

#[test]
fn infeasible_pc_exits_with_feasibility_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = |require: bool| {
        json!({
            "instance": {"name": "vanishing_gradient", "params": {"w_max": 2.0}},
            "command": "solve-pc",
            "params": {"theta": [0.01], "grid": {"points_per_dim": 201}, "require_feasible": require},
            "output_dir": out,
        })
    };
    assert_eq!(run_config(tmp.path(), config(true), &[]).status.code(), Some(4));
    assert_eq!(run_config(tmp.path(), config(false), &[]).status.code(), Some(0));
    let result = read_json(&out.join("result.json"));
    assert_eq!(result["outcome"]["status"], json!("infeasible"));
}

#[test]
fn every_command_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            "solve-pr",
            json!({"name": "ordered_regression"}),
            json!({"lambda": [1.0], "solver": {"kind": "descent", "restarts": 2}}),
        ),
        ("solve-pc", json!({"name": "log_unbounded"}), json!({"theta": [1.0], "grid": {"points_per_dim": 1001}})),
        (
            "theorem1",
            json!({"name": "plateau"}),
            json!({"lambdas": [[1.0]], "random_count": 3, "grid": {"points_per_dim": 201}}),
        ),
        (
            "attainability",
            json!({"name": "finite_table", "params": {"rows": 3, "l0": 1, "c0": 0.5, "l1": 0, "c1": 1, "l2": 3, "c2": 0}}),
            json!({"w_star": [0.0], "write_halfspaces": true}),
        ),
        (
            "monotonicity",
            json!({"name": "vanishing_gradient"}),
            json!({"lambdas": [[1.0], [10.0], [100.0]], "solver": {"kind": "grid", "points_per_dim": 1001}}),
        ),
        (
            "sensitivity",
            json!({"name": "vanishing_gradient"}),
            json!({"thetas": [0.1, 0.01], "lambda_range": {"lo": 1, "hi": 1000, "count": 31}, "grid": {"points_per_dim": 10001}}),
        ),
        (
            "pr4pc",
            json!({"name": "vanishing_gradient"}),
            json!({"theta": [0.1], "strategy": {"kind": "binary_search", "lo": 1, "hi": 100, "tol": 0.01},
                   "solver": {"kind": "grid", "points_per_dim": 10001}, "conformance": {"points_per_dim": 10001}}),
        ),
    ];
    for (command, instance, params) in cases {
        let out = tmp.path().join(command);
        let o = run_config(
            tmp.path(),
            json!({"instance": instance, "command": command, "params": params, "output_dir": out, "seed": 3}),
            &["--threads", "2"],
        );
        assert_eq!(o.status.code(), Some(0), "{command}: {}", String::from_utf8_lossy(&o.stderr));
        assert_manifest_complete(&out);
        assert!(out.join("result.json").exists(), "{command}");
    }
    let att = read_json(&tmp.path().join("attainability/result.json"));
    assert_eq!(att["interval"]["lower"], json!(2.0));
    assert_eq!(att["interval"]["upper"], json!(4.0));
    let bounds = fs::read_to_string(tmp.path().join("attainability/curve-bounds.dat")).unwrap();
    assert_eq!(bounds.lines().count(), 3);
}

#[test]
fn demo_reruns_are_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(regcon(&["demo", "fig1a", "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        regcon(&["--threads", "1", "demo", "fig1a", "--out", b.to_str().unwrap()]).status.code(),
        Some(0)
    );
    assert_eq!(listing(&a), listing(&b));
    for name in listing(&a) {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name}");
    }
    let summary = fs::read_to_string(a.join("summary.txt")).unwrap();
    assert!(summary.contains("observed: yes"), "{summary}");
}

#[test]
fn schema_subcommand_prints_json() {
    let o = regcon(&["schema"]);
    assert_eq!(o.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(schema["$defs"]["params_pr4pc"].is_object());
}

#[test]
fn unknown_demo_is_rejected_by_the_parser() {
    let tmp = tempfile::tempdir().unwrap();
    let o = regcon(&["demo", "fig9", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
