use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn closure14(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_closure14"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn coeffs_csv_has_header_and_known_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = closure14(&["coeffs", "--format", "csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("p,q,S,lambda,lambda_ll,lambda_ppqq,value")
    );
    let row = text
        .lines()
        .find(|l| l.starts_with("1,0,"))
        .expect("row p=1, q=0");
    let value: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((value + 43.401).abs() < 1e-3, "{value}");
    // provenance trailer
    assert!(text.contains("# family={\"kind\":\"exponential\""));
    assert!(text.contains("# seed=0"));
}

#[test]
fn nonpositive_trace_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"point": {"lambda_ll": -1}}"#).unwrap();
    let out = closure14(&["coeffs", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 3);
    assert!(
        stderr(&out).contains("lambda_ll must be positive"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n_trunc": "six"}"#).unwrap();
    let out = closure14(&["coeffs", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("n_trunc"));

    let out = closure14(&["coeffs", "--family", "gaussian"], dir.path());
    assert_eq!(code(&out), 2);

    let out = closure14(&["eval", "--format", "csv"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_passes_and_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = closure14(&["verify", "--out", path.to_str().unwrap()], dir.path());
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report = json_file(&a);
    assert_eq!(report["command"], "verify");
    assert_eq!(report["config"]["n_trunc"], 6);
    assert_eq!(report["config"]["s_trunc"], 4);
    assert_eq!(report["config"]["seed"], 0);
    assert_eq!(report["result"]["summary"]["failed"], 0);
}

#[test]
fn different_seed_changes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    closure14(&["verify", "--out", a.to_str().unwrap()], dir.path());
    closure14(
        &["verify", "--seed", "7", "--out", b.to_str().unwrap()],
        dir.path(),
    );
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(json_file(&b)["result"]["metadata"]["seed"], 7);
}

#[test]
fn fault_family_fails_with_condition_ids() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let out = closure14(
        &[
            "verify",
            "--family",
            "fault-ladder",
            "--out",
            path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("ladder.closed_form[s=1]"), "{err}");
    let report = json_file(&path);
    assert!(report["result"]["summary"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn zero_boost_leaves_moments_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let out = closure14(&["boost"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &v["result"];
    let mut rest = r["rest_moments"].clone();
    let mut lab = r["lab_moments"].clone();
    rest["frame"] = Value::Null;
    lab["frame"] = Value::Null;
    assert_eq!(rest, lab);
}

#[test]
fn kinetic_compare_reports_max_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = closure14(&["kinetic"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let max = v["result"]["max_relative_deviation"].as_f64().unwrap();
    assert!(max <= 1e-7, "{max}");
}

#[test]
fn subsystem_lists_even_orders_with_zero_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"subsystem": {"q_max": 4, "lambdas": [0.0]}}"#).unwrap();
    let out = closure14(
        &["subsystem", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = v["result"]["tables"][0]["entries"].as_array().unwrap();
    let qs: Vec<u64> = entries.iter().map(|e| e["q"].as_u64().unwrap()).collect();
    assert_eq!(qs, [0, 2, 4]);
    assert!(entries.iter().all(|e| e["c_q"] == 0.0));
    assert!(v["result"]["note"].as_str().unwrap().contains("c_q"));
}

#[test]
fn flags_take_precedence_and_inputs_are_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let text = r#"{"n_trunc": 4, "seed": 3}"#;
    std::fs::write(&cfg, text).unwrap();
    let c = cfg.to_str().unwrap();

    let out = closure14(&["eval", "--config", c, "--n-trunc", "2"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["n_trunc"], 2);
    assert_eq!(v["config"]["seed"], 3);

    let out = closure14(&["eval", "--config", c, "--out", c], dir.path());
    assert_eq!(code(&out), 2);
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), text);
}
