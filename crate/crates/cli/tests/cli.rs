use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minmax_cli::{builtin_tiny, replay_check, CliError};
use minmax_core::model::{AgentSpec, MinMaxProblem, ScalarCost};
use minmax_core::Graph;
use serde_json::json;
use tempfile::TempDir;

fn minmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmax")).args(args).output().expect("binary runs")
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn tiny_config(dir: &Path, iterations: usize) -> PathBuf {
    write_json(
        dir,
        "tiny.json",
        &json!({
            "seed": 3,
            "problem": { "kind": "builtin_tiny" },
            "graph": { "kind": "complete" },
            "run": { "iterations": iterations, "record_rho": true },
            "output_dir": "out"
        }),
    )
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn tiny_run_reaches_optimal_peak() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path(), 400);
    let out = minmax(&["run", "--config", cfg.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert!((report["sum_rho"].as_f64().unwrap() - 1.5).abs() <= 1e-3);
    assert!((report["P_star"].as_f64().unwrap() - 1.5).abs() <= 1e-9);
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    assert_eq!(header, "t,sum_rho,P_t,cost_error,max_violation,rho_0,rho_1");
    assert_eq!(trace.lines().count(), 401);
    for name in ["resolved_config.json", "oracle.json"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
}

#[test]
fn bare_flags_and_overrides() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path(), 400);
    let target = dir.path().join("elsewhere");
    let out = minmax(&["--config", cfg.to_str().unwrap(), "--output-dir", target.to_str().unwrap(), "--iterations", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("sum_rho"));
    let trace = fs::read_to_string(target.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 8);
}

#[test]
fn missing_config_exits_two_and_names_the_path() {
    let out = minmax(&["run", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/cfg.json"));
}

#[test]
fn malformed_config_exits_two() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{ \"seed\": 1, \"problem\": { \"kind\": \"nope\" } }").unwrap();
    let out = minmax(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn graph_size_mismatch_exits_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("problem.json"), builtin_tiny().to_json().unwrap()).unwrap();
    fs::write(dir.path().join("graph.txt"), Graph::path(3).unwrap().to_edge_list()).unwrap();
    let cfg = write_json(
        dir.path(),
        "cfg.json",
        &json!({
            "seed": 0,
            "problem": { "kind": "file", "path": "problem.json" },
            "graph": { "kind": "edge_list", "path": "graph.txt" },
            "run": { "iterations": 10 }
        }),
    );
    let out = minmax(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dimension mismatch"), "{}", stderr(&out));
}

#[test]
fn empty_feasible_set_exits_three() {
    let dir = TempDir::new().unwrap();
    let empty = AgentSpec::new(vec![vec![1.0, 1.0]], vec![-1.0], vec![0.0; 2], vec![1.0; 2], vec![ScalarCost::Affine { c: 1.0 }; 2]).unwrap();
    let ok = builtin_tiny().agents[0].clone();
    let problem = MinMaxProblem::new(vec![ok, empty]).unwrap();
    fs::write(dir.path().join("problem.json"), problem.to_json().unwrap()).unwrap();
    let cfg = write_json(
        dir.path(),
        "cfg.json",
        &json!({
            "seed": 0,
            "problem": { "kind": "file", "path": "problem.json" },
            "graph": { "kind": "complete" },
            "run": { "iterations": 10 }
        }),
    );
    let out = minmax(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn replay_accepts_fresh_output_and_flags_edits() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path(), 50);
    assert_eq!(minmax(&["run", "--config", cfg.to_str().unwrap(), "--quiet"]).status.code(), Some(0));
    let trace = dir.path().join("out/trace.csv");
    let report = dir.path().join("out/report.json");
    let args = ["replay", "--trace", trace.to_str().unwrap(), "--report", report.to_str().unwrap()];
    let out = minmax(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 50 rows"));

    // push P_t above sum_rho on the fourth data row
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[4].split(',').map(str::to_string).collect();
    let sum_rho: f64 = cells[1].parse().unwrap();
    cells[2] = (sum_rho + 0.25).to_string();
    lines[4] = cells.join(",");
    fs::write(&trace, lines.join("\n") + "\n").unwrap();

    let outcome = replay_check(&trace, &report).unwrap();
    assert!(!outcome.ok());
    assert!(outcome.failures.iter().any(|f| f.row == 3 && f.t == 4), "{:?}", outcome.failures);
    let out = minmax(&args);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("row 3 (t=4)"), "{}", stderr(&out));
}

#[test]
fn replay_rejects_empty_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = tiny_config(dir.path(), 5);
    assert_eq!(minmax(&["run", "--config", cfg.to_str().unwrap(), "--quiet"]).status.code(), Some(0));
    let trace = dir.path().join("out/trace.csv");
    fs::write(&trace, "").unwrap();
    let err = replay_check(&trace, &dir.path().join("out/report.json")).unwrap_err();
    assert!(matches!(err, CliError::Malformed { .. }), "{err:?}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn reruns_are_byte_identical_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let cfg = write_json(
        dir.path(),
        "tcl.json",
        &json!({
            "seed": 5,
            "problem": { "kind": "tcl", "n_agents": 4, "horizon": 16 },
            "graph": { "kind": "erdos_renyi", "p": 0.5 },
            "run": { "iterations": 60, "record_every": 5 }
        }),
    );
    let run = |sub: &str, seed: &str| {
        let target = dir.path().join(sub);
        let out = minmax(&["run", "--config", cfg.to_str().unwrap(), "--output-dir", target.to_str().unwrap(), "--seed", seed, "--quiet"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        (fs::read(target.join("trace.csv")).unwrap(), fs::read(target.join("report.json")).unwrap())
    };
    let a = run("a", "5");
    let b = run("b", "5");
    let c = run("c", "6");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
}
