use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qpwalk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpwalk"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn qpwalk")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn env_build_then_potential_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&qpwalk(&["env", "build", "--trap", "0", "--out", "trap.json"], d)), 0);
    let out = qpwalk(&["potential", "table", "--env", "trap.json", "--from", "-2", "--to", "2"], d);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,p,sigma,log_abs_m"));
    // Flat bottom at {-1, 0}, then ln 2 per step on both sides.
    let sig: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    let ln2 = std::f64::consts::LN_2;
    for (got, want) in sig.iter().zip([ln2, 0.0, 0.0, ln2, 2.0 * ln2]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn criteria_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qpwalk(&["env", "build", "--trap", "0", "--out", "trap.json"], d);
    qpwalk(&["env", "build", "--periodic", "0.7,0.45", "--out", "per.json"], d);
    let pass = qpwalk(&["criteria", "check", "--env", "trap.json", "--kind", "c1", "--n", "64"], d);
    assert_eq!(code(&pass), 0);
    assert_eq!(json(&pass)["holds"], Value::Bool(true));
    let fail = qpwalk(&["criteria", "check", "--env", "per.json", "--kind", "c1", "--n", "64"], d);
    assert_eq!(code(&fail), 2);
    assert_eq!(json(&fail)["holds"], Value::Bool(false));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = qpwalk(&["walk", "exact", "--env", "nope.json", "--t", "3"], d);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
    let bad = qpwalk(&["env", "build", "--constant", "1.5"], d);
    assert_eq!(code(&bad), 1);
    let threads = Command::new(env!("CARGO_BIN_EXE_qpwalk"))
        .args(["env", "build", "--constant", "0.5"])
        .env("QPWALK_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&threads), 1);
}

#[test]
fn walk_exit_matches_gamblers_ruin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qpwalk(&["env", "build", "--constant", "0.5", "--out", "fair.json"], d);
    let out = qpwalk(&["walk", "exit", "--env", "fair.json", "--a", "-3", "--b", "7", "--start", "0"], d);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["p_exit_right"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!((v["mean_tau"].as_f64().unwrap() - 21.0).abs() < 1e-9);
}

#[test]
fn simulate_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qpwalk(&["env", "build", "--periodic", "0.7,0.45", "--out", "per.json"], d);
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_qpwalk"))
            .args(["walk", "simulate", "--env", "per.json", "--t", "200", "--n-traj", "500", "--seed", "9", "--out", out])
            .env("QPWALK_THREADS", threads)
            .current_dir(d)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(d.join(out)).unwrap()
    };
    assert_eq!(run("1", "a.csv"), run("4", "b.csv"));
}

#[test]
fn exact_walk_and_moments_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qpwalk(&["env", "build", "--constant", "0.75", "--out", "c.json"], d);
    let out = qpwalk(&["analyze", "moments", "--env", "c.json", "--t", "40"], d);
    let v = json(&out);
    assert!((v["mean"].as_f64().unwrap() - 20.0).abs() < 1e-9);
    assert!((v["variance"].as_f64().unwrap() - 30.0).abs() < 1e-9);
    let law = qpwalk(&["walk", "exact", "--env", "c.json", "--t", "40"], d);
    assert_eq!(code(&law), 0);
    let total: f64 = String::from_utf8(law.stdout)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn scenario_build_embeds_a_usable_env() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = qpwalk(
        &["scenario", "build", "--kind", "c3", "--n", "8", "--alpha", "liouville:2,3,4", "--s", "2", "--out", "plan.json"],
        d,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let plan: Value = serde_json::from_str(&std::fs::read_to_string(d.join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["kind"], "c3");
    let defect = plan["perturbation"]["symmetry_defect"].as_f64().unwrap();
    assert!(defect.abs() < 1e-10);
    let inspect = qpwalk(&["env", "inspect", "--env", "plan.json", "--from", "-50", "--to", "50"], d);
    assert_eq!(code(&inspect), 0);
    assert!(json(&inspect)["kappa"].as_f64().unwrap() > 0.0);
}

#[test]
fn scenario_run_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = qpwalk(&["scenario", "run", "--name", "localization", "--out", "first"], d);
    assert_eq!(code(&run), 0);
    assert_eq!(json(&run)["pass"], Value::Bool(true));
    let csv = std::fs::read_to_string(d.join("first/sigma_profile.csv")).unwrap();
    assert!(csv.starts_with("k,sigma\n"));
    let replay = qpwalk(&["scenario", "run", "--manifest", "first/manifest.json", "--out", "second"], d);
    assert_eq!(code(&replay), 0);
    assert_eq!(json(&replay)["identical"], Value::Bool(true));
    for f in ["config.json", "verdict.json", "sigma_profile.csv"] {
        assert_eq!(std::fs::read(d.join("first").join(f)).unwrap(), std::fs::read(d.join("second").join(f)).unwrap());
    }
}

#[test]
fn scenario_overrides_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = qpwalk(&["scenario", "run", "--name", "localization", "--set", "bogus=1", "--out", "x"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn stationary_density_on_an_asymmetric_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qpwalk(&["env", "build", "--cosine", "0.6,0.1,1", "--out", "q.json"], d);
    let out = qpwalk(&["analyze", "stationary", "--env", "q.json", "--grid", "16", "--out", "rho.csv"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["eqim_residual"].as_f64().unwrap() < 1e-9);
    let drift = qpwalk(&["analyze", "drift-profile", "--env", "q.json", "--t", "500", "--grid", "4"], d);
    assert_eq!(code(&drift), 0);
    assert_eq!(String::from_utf8(drift.stdout).unwrap().lines().count(), 5);
}
