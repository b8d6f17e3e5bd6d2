use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn ped2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ped2"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    path
}

fn small_experiment() -> Value {
    json!({"experiment": {
        "agents": 20, "local_dim": 4, "coupling_dim": 4,
        "coupling": {"kind": "upper_bound"}, "coupling_matrices": "identity",
        "graph_seed": 1, "cost_seed": 2, "max_iter": 3000
    }})
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn last_sq_err(csv: &Path) -> f64 {
    let text = std::fs::read_to_string(csv).unwrap();
    let last = text.lines().last().unwrap();
    last.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn demo_writes_both_traces_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = ped2(&["demo-fig1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(last_sq_err(&out.join("trace_ped2.csv")) <= 1e-10);
    assert!(out.join("trace_central.csv").exists());
    let header = std::fs::read_to_string(out.join("trace_ped2.csv")).unwrap();
    assert!(header.starts_with("iter,sq_err_w,sq_err_y,lyapunov_V,bound_gamma_pow_i_Co\n"));
    let summary: Value =
        serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ped2"]["initialization"], "zero");
}

#[test]
fn validate_reports_all_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_experiment());
    let out = dir.path().join("out");
    let res = ped2(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0);
    let line = String::from_utf8(res.stdout).unwrap();
    for item in [
        "doubly-stochastic ✓",
        "combination conditions ✓",
        "full-row-rank ✓",
    ] {
        assert!(line.contains(item), "{line}");
    }
    let report: Value =
        serde_json::from_slice(&std::fs::read(out.join("validate.json")).unwrap()).unwrap();
    assert_eq!(report["ok"], true);
}

#[test]
fn oversized_dual_step_fails_rate_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_experiment());
    let out = dir.path().join("out");
    let res = ped2(&[
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        r#"experiment.steps={"mu_w":0.01,"mu_y":5}"#,
    ]);
    assert_eq!(code(&res), 3);
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("mu_y < 2 delta nu"), "{err}");
    let report: Value =
        serde_json::from_slice(&std::fs::read(out.join("rate.json")).unwrap()).unwrap();
    assert_eq!(report["certified"], false);
}

#[test]
fn certified_rate_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_experiment());
    let out = dir.path().join("out");
    let res = ped2(&[
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let report: Value =
        serde_json::from_slice(&std::fs::read(out.join("rate.json")).unwrap()).unwrap();
    assert!(report["gamma"].as_f64().unwrap() < 1.0);
}

#[test]
fn parse_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"experiment\": {,\n}").unwrap();
    let res = ped2(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("bad.json") && err.contains("line 2"), "{err}");

    let good = write_config(dir.path(), &small_experiment());
    let res = ped2(&[
        "run",
        "--config",
        good.to_str().unwrap(),
        "--set",
        "experiment.agnts=3",
    ]);
    assert_eq!(code(&res), 2);
    let res = ped2(&[
        "run",
        "--config",
        good.to_str().unwrap(),
        "--set",
        "noequals",
    ]);
    assert_eq!(code(&res), 2);
    let res = ped2(&["run"]);
    assert_eq!(code(&res), 2);
}

#[test]
fn divergence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_experiment());
    let out = dir.path().join("out");
    let res = ped2(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        r#"experiment.steps={"mu_w":5,"mu_y":5}"#,
    ]);
    assert_eq!(code(&res), 4);
}

#[test]
fn reruns_are_byte_identical_and_leave_config_alone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &small_experiment());
    let before = std::fs::read(&cfg).unwrap();
    let out = dir.path().join("out");
    let files = [
        "trace_ped2.csv",
        "trace_central.csv",
        "rate.json",
        "summary.json",
        "logerr_ped2.dat",
        "logerr_central.dat",
    ];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let res = ped2(&[
            "run",
            "--quiet",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&res), 0);
        assert!(res.stdout.is_empty());
        snapshots.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(snapshots[0], snapshots[1]);
    assert_eq!(std::fs::read(&cfg).unwrap(), before);
    // no temporary files left behind
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), files.len());
}

#[test]
fn oracle_on_explicit_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "problem": {
                "agents": [
                    {"R": [[1.0]], "r": [0.0], "B": [[1.0]]},
                    {"R": [[2.0]], "r": [1.0], "B": [[1.0]]}
                ],
                "g": {"kind": "upper_bound", "b": [-1.0]}
            },
            "topology": {"K": 2, "edges": [[0, 1]]},
            "steps": {"mu_w": 0.5, "mu_y": 0.5}
        }),
    );
    let out = dir.path().join("out");
    let res = ped2(&[
        "oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let sol: Value =
        serde_json::from_slice(&std::fs::read(out.join("oracle.json")).unwrap()).unwrap();
    // min ½w₁² + w₂² + w₂ s.t. w₁ + w₂ ≤ −1: stationarity gives w₁ = −y and
    // 2w₂ + 1 = −y, so the active bound yields y★ = 1/3.
    let w = sol["w_star"].as_array().unwrap();
    let (w1, w2) = (w[0].as_f64().unwrap(), w[1].as_f64().unwrap());
    let y = sol["y_star"][0].as_f64().unwrap();
    assert!((y - 1.0 / 3.0).abs() < 1e-12);
    assert!((w1 + 1.0 / 3.0).abs() < 1e-12 && (w2 + 2.0 / 3.0).abs() < 1e-12);

    let res = ped2(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}
