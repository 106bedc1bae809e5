use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use compass_cli::config::{load_scenario, parse_scenario};
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn compass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compass"))
        .args(args)
        .env_remove("COMPASS_LOG")
        .output()
        .expect("spawn compass")
}

fn run_in(dir: &Path, name: &str, extra: &[&str]) -> Output {
    let path = scenario(name);
    let mut args = vec!["run", path.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    compass(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_variant(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(scenario(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

#[test]
fn consensus_pair_writes_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "consensus_pair.json", &["--strict"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,agent,x_1,active_p");
    // 10 / 1e-3 steps plus the initial sample, two agents each, no switches.
    assert_eq!(lines.len() - 1, 2 * 10_001);
    assert!(csv.ends_with('\n') && !csv.contains('\r'));

    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["V"].as_array().unwrap().len(), 10_001);
    assert_eq!(metrics["verdicts"]["agreement"], Value::Bool(true));
    assert_eq!(metrics["verdicts"]["feasible"], Value::Bool(true));
    assert!((metrics["lambda_hat"].as_f64().unwrap() - 2.0).abs() < 0.02);
}

#[test]
fn downsampling_keeps_the_last_sample_and_full_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "consensus_pair.json", |v| {
        v["outputs"] = serde_json::json!({"downsample": 3});
    });
    let out = compass(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    // Samples 0, 3, ..., 9999 and the final sample 10000.
    assert_eq!(csv.lines().count() - 1, 2 * (3334 + 1));
    assert!(csv.lines().last().unwrap().starts_with("10,2,"));
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["V"].as_array().unwrap().len(), 10_001);
}

#[test]
fn switch_instants_add_samples() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "consensus_pair.json", |v| {
        v["graphs"] = serde_json::json!([
            {"n": 2, "arcs": [[1, 2, 1]]},
            {"n": 2, "arcs": [[2, 1, 1]]}
        ]);
        v["signal"] = serde_json::json!({
            "tau_d": 0.4, "pieces": [[0.0, 0], [0.5004, 1]], "horizon_end": 1.0, "periodic": true
        });
        v.as_object_mut().unwrap().remove("validation");
    });
    let out = compass(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    // Wraps at integer times sit on the 1e-3 grid; the switches at k + 0.5004 do not.
    let switches = (0..10).map(|k| k as f64 + 0.5004).filter(|&t| t < 10.0).count();
    assert_eq!(switches, 10);
    assert_eq!(csv.lines().count() - 1, 2 * (10_001 + switches));
}

#[test]
fn negative_gamma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "consensus_pair.json", |v| {
        v["protocol"]["gamma"] = serde_json::json!(-1.0);
    });
    let out = compass(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("protocol.gamma"), "{}", stderr(&out));
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn schema_errors_report_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "consensus_pair.json", |v| {
        v["integrator"]["stepsize"] = serde_json::json!(0.1);
    });
    let out = compass(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line") && err.contains("integrator") && err.contains("stepsize"), "{err}");

    let missing = compass(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn quarter_turn_rotation_is_flagged_under_strict() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "rotated_quarter_turn.json", &["--strict"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("OutsideTangentCone"));
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    let first = &metrics["violations"][0];
    assert_eq!(first["kind"], "feasibility");
    assert_eq!(first["agent"], 0);
    assert_eq!(first["reason"], "outside_tangent_cone");

    // Without --strict the same run reports but succeeds.
    let lax = run_in(dir.path(), "rotated_quarter_turn.json", &[]);
    assert_eq!(lax.status.code(), Some(0));
}

#[test]
fn monitor_violation_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_variant(dir.path(), "rotated_quarter_turn.json", |v| {
        v.as_object_mut().unwrap().remove("validation");
    });
    let out = compass(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn blow_up_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    // h * weight far outside the RK4 stability region.
    let path = write_variant(dir.path(), "consensus_pair.json", |v| {
        v["protocol"]["weight"] = serde_json::json!(1e6);
        v["protocol"]["gamma"] = serde_json::json!(1e6);
    });
    let out = compass(&["run", path.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
    assert!(stderr(&out).contains("diverged"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run_in(dir.path(), "switching_five.json", &["--seed", "11"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for f in ["trajectory.csv", "metrics.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let c = tempfile::tempdir().unwrap();
    run_in(c.path(), "switching_five.json", &["--seed", "12"]);
    assert_ne!(
        std::fs::read(a.path().join("trajectory.csv")).unwrap(),
        std::fs::read(c.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn batch_runs_write_isolated_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = (scenario("consensus_pair.json"), scenario("rotated_triangle.json"));
    let out = compass(&[
        "run",
        p.to_str().unwrap(),
        q.to_str().unwrap(),
        "--batch",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for stem in ["consensus_pair", "rotated_triangle"] {
        assert!(dir.path().join(stem).join("trajectory.csv").exists());
        assert!(dir.path().join(stem).join("metrics.json").exists());
    }
    // Batch output matches a standalone run.
    let solo = tempfile::tempdir().unwrap();
    run_in(solo.path(), "consensus_pair.json", &[]);
    assert_eq!(
        std::fs::read(solo.path().join("metrics.json")).unwrap(),
        std::fs::read(dir.path().join("consensus_pair/metrics.json")).unwrap()
    );

    let no_batch = compass(&["run", p.to_str().unwrap(), q.to_str().unwrap()]);
    assert_eq!(no_batch.status.code(), Some(2));
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("switching_five.json");
    let out = compass(&["dump-config", path.to_str().unwrap(), "--seed", "99"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let echoed = parse_scenario(&stdout(&out)).unwrap();
    assert_eq!(echoed, load_scenario(&path).unwrap().with_seed(99));

    // Echoing the echo is a fixed point.
    let again = dir.path().join("echo.json");
    std::fs::write(&again, stdout(&out)).unwrap();
    let second = compass(&["dump-config", again.to_str().unwrap()]);
    assert_eq!(stdout(&second), stdout(&out));
}

#[test]
fn ring_halves_are_jointly_strong() {
    let path = scenario("ring_halves.json");
    let out = compass(&["check-graphs", path.to_str().unwrap(), "--window", "2", "--mode", "strong"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("uniformly jointly strongly connected"));

    let short = compass(&["check-graphs", path.to_str().unwrap(), "--T", "1", "--mode", "strong"]);
    assert_eq!(short.status.code(), Some(1));
    assert!(stdout(&short).contains("witness window"));
}

#[test]
fn two_components_fail_with_a_witness() {
    let path = scenario("two_components.json");
    for t in ["0.5", "3", "10"] {
        let out = compass(&["check-graphs", path.to_str().unwrap(), "--window", t, "--json"]);
        assert_eq!(out.status.code(), Some(1));
        let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(report["connected"], Value::Bool(false));
        assert_eq!(report["witness"]["start"], 0.0);
    }
}

#[test]
fn window_beyond_the_horizon_is_rejected() {
    let path = scenario("two_components.json");
    let out = compass(&["check-graphs", path.to_str().unwrap(), "--window", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("horizon"));

    let bad = compass(&["check-graphs", "/nonexistent.json", "--window", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn rate_bound_values(out: &Output) -> Vec<f64> {
    stdout(out)
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn rate_bound_follows_the_formula_chain() {
    let base = ["rate-bound", "--n", "2", "--d", "1", "--T", "0.5", "--tau-d", "0.25"];
    let mut args = base.to_vec();
    args.extend(["--gamma", "1", "--l-star", "1", "--l-plus", "1"]);
    let out = compass(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = rate_bound_values(&out);
    let (t1, t_bar) = (0.5 + 2.0 * 0.25, 4.0 * (0.5 + 2.0 * 0.25));
    // n = 2: exp(-n L* T_bar) * min(gamma tau / (2 (L+ tau + 1)), 1/2).
    let beta = (-2.0f64 * t_bar).exp() * (0.25f64 / (2.0 * 1.25)).min(0.5);
    // -ln(1 - beta) as a power series; the direct form cancels for small beta.
    let beta_star = (1..8).map(|k| beta.powi(k) / k as f64).sum::<f64>() / t_bar;
    assert_eq!(v[0], t1);
    assert_eq!(v[1], t_bar);
    assert!((v[2] - beta).abs() <= 1e-15 * beta);
    assert!((v[3] - beta_star).abs() <= 1e-12 * beta_star);
}

#[test]
fn rate_bound_rejects_bad_flags() {
    let missing = compass(&["rate-bound", "--n", "2", "--d", "1", "--T", "1", "--tau-d", "1", "--gamma", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("Usage"));

    let full = |n: &str, gamma: &str| {
        compass(&[
            "rate-bound", "--n", n, "--d", "1", "--T", "1", "--tau-d", "1", "--gamma", gamma, "--l-star",
            "1", "--l-plus", "1",
        ])
    };
    assert_eq!(full("1", "1").status.code(), Some(2));
    assert_eq!(full("2", "0").status.code(), Some(2));
    let neg = full("2", "-1");
    assert_eq!(neg.status.code(), Some(2));
    assert!(stderr(&neg).contains("--gamma"));
}
