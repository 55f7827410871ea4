use std::process::Command;

use serde_json::Value;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latent-ssl"))
}

fn stdout_json(args: &[&str]) -> Value {
    let out = cli().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn coeffs_prints_the_report() {
    let v = stdout_json(&["coeffs", "--alpha", "0.5"]);
    let c1 = v["c1"].as_f64().unwrap();
    assert!((c1 - 2.0 * 2f64.ln()).abs() < 1e-5, "{c1}");
    assert!(v["c_nl"].as_f64().unwrap() > c1);
}

#[test]
fn preset_round_trips_through_validate_config() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fig3", "theorem-check", "error-curve"] {
        let v = stdout_json(&["preset", name]);
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let r = stdout_json(&["validate-config", path.to_str().unwrap()]);
        assert_eq!(r["valid"], Value::Bool(true));
        assert_eq!(r["config_sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = stdout_json(&["preset", "error-curve"]);
    v["alpha"] = Value::from(1.5);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let out = cli()
        .args(["validate-config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["field"], "alpha");
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = cli()
        .args(["validate-config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_free_energy_kind_fails_cleanly() {
    let out = cli().args(["free-energy", "--kind", "x|y"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["message"].as_str().unwrap().contains("x|y"));
}

#[test]
fn free_energy_is_reproducible_for_a_seed() {
    let a = stdout_json(&["--seed", "7", "free-energy", "--kind", "y|x&x", "--n", "8"]);
    let b = stdout_json(&["--seed", "7", "free-energy", "--kind", "y|x&x", "--n", "8"]);
    assert_eq!(a["value"], b["value"]);
    assert!(a["value"].as_f64().unwrap().is_finite());
}
