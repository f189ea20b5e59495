use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tspq(args: &[&str]) -> Output {
    tspq_env(args, None)
}

fn tspq_env(args: &[&str], results: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tspq"));
    cmd.args(args)
        .env("RUST_LOG", "error")
        .env_remove("TSPQ_RESULTS_DIR");
    if let Some(r) = results {
        cmd.env("TSPQ_RESULTS_DIR", r);
    }
    cmd.output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn assert_record_schema(v: &Value) {
    let obj = v.as_object().unwrap();
    assert_eq!(obj.len(), 13);
    assert!(obj["method"].is_string());
    for key in [
        "n",
        "seed",
        "iterations_used",
        "circuit_depth",
        "total_gates",
    ] {
        assert!(obj[key].is_u64(), "{key}");
    }
    for key in [
        "best_cost",
        "classical_cost",
        "approximation_ratio",
        "valid_sample_fraction",
        "wall_time",
    ] {
        assert!(obj[key].is_f64(), "{key}");
    }
    assert!(obj["fallback_used"].is_boolean());
    let tour = obj["best_tour"].as_array().unwrap();
    assert_eq!(tour.len() as u64, obj["n"].as_u64().unwrap());
    assert!(obj["approximation_ratio"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn classical_solve_is_exact() {
    let o = tspq(&[
        "solve",
        "--method",
        "classical",
        "--cities",
        "4",
        "--seed",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_record_schema(&v);
    assert_eq!(v["approximation_ratio"].as_f64(), Some(1.0));
}

#[test]
fn oversized_qubo_is_infeasible() {
    let o = tspq(&[
        "solve",
        "--method",
        "quantum",
        "--cities",
        "8",
        "--encoding",
        "qubo",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("16-qubit limit"));
}

#[test]
fn noisy_hybrid_ml_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solve");
    let o = tspq(&[
        "solve",
        "--method",
        "hybrid-ml",
        "--cities",
        "8",
        "--seed",
        "7",
        "--noise",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = stdout_json(&o);
    assert_record_schema(&v);
    assert_eq!(v["method"], "hybrid_ml");
    let saved: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
    assert!(out.join("params.jsonl").exists());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["solve", "--method", "annealing", "--cities", "4"],
        vec!["solve", "--method", "quantum", "--cities", "9"],
        vec!["solve", "--method", "quantum", "--cities", "3"],
        vec![
            "experiment",
            "--min",
            "6",
            "--max",
            "5",
            "--methods",
            "classical",
        ],
        vec![
            "solve",
            "--method",
            "quantum",
            "--cities",
            "4",
            "--config",
            "/nonexistent/cfg.json",
        ],
    ] {
        let code = tspq(&args).status.code();
        assert!(code == Some(2) || code == Some(4), "{args:?}: {code:?}");
    }
    assert_eq!(
        tspq(&["solve", "--method", "quantum", "--cities", "3"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"shots": 128, "max_iters": 10, "encoding": "qubo"}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let o = tspq(&[
        "solve", "--method", "quantum", "--cities", "8", "--config", c,
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = tspq(&[
        "solve",
        "--method",
        "quantum",
        "--cities",
        "8",
        "--config",
        c,
        "--encoding",
        "compact",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout_json(&o)["iterations_used"].as_u64().unwrap() <= 10);

    std::fs::write(&cfg, r#"{"shots": 128, "unknown_field": 1}"#).unwrap();
    assert_eq!(
        tspq(&["solve", "--method", "quantum", "--cities", "4", "--config", c])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn experiment_counts_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let o = tspq(&[
        "experiment",
        "--min",
        "4",
        "--max",
        "5",
        "--runs",
        "3",
        "--methods",
        "classical",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 6);

    let stats: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    let rep = dir.path().join("rep");
    let o = tspq(&[
        "report",
        "--input",
        out.to_str().unwrap(),
        "--format",
        "table",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        table,
        std::fs::read_to_string(rep.join("appendix.txt")).unwrap()
    );
    for label in [
        "Quantum Solution (Cost in km)",
        "Classical Solution (Cost in km)",
        "Approximation Ratio",
        "Circuit Depth",
        "Total Gates",
    ] {
        assert_eq!(table.matches(label).count(), 1, "{label}");
    }
    for s in stats.as_array().unwrap() {
        let cost = tspq_core::metrics::sig6(s["mean_cost"].as_f64().unwrap());
        assert!(table.contains(&cost), "{cost} missing");
    }

    let o = tspq(&[
        "report",
        "--input",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read_to_string(rep.join("stats.json")).unwrap(),
        std::fs::read_to_string(out.join("stats.json")).unwrap()
    );
}

#[test]
fn empty_report_input_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        tspq(&["report", "--input", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn results_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = tspq_env(
        &[
            "experiment",
            "--min",
            "4",
            "--max",
            "4",
            "--runs",
            "1",
            "--methods",
            "classical",
        ],
        Some(dir.path()),
    );
    assert_eq!(o.status.code(), Some(0));
    let printed = String::from_utf8(o.stdout).unwrap();
    let out = Path::new(printed.trim());
    assert!(out.starts_with(dir.path()));
    assert!(out.join("records.csv").exists());
}
