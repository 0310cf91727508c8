use std::process::{Command, Output};

fn erw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erw"))
        .args(args)
        .env_remove("ERW_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn classify_reports_drift_and_regime() {
    let v = json(&erw(&["classify", "--p", "0.9,0.9,0.9"]));
    assert!((v["delta"].as_f64().unwrap() - 2.4).abs() < 1e-12);
    assert_eq!(v["transience"], "TransientRight");
    assert_eq!(v["speed_sign"], "Positive");
}

#[test]
fn bounds_below_critical_drift_is_a_domain_error() {
    let out = erw(&["bounds", "--p", "0.8,0.8,0.8"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("delta = 1.8"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(erw(&["bounds"]).status.code(), Some(2));
    assert_eq!(erw(&["bounds", "--p", "0.9,1.3,0.9"]).status.code(), Some(2));
    assert_eq!(erw(&["nonsense"]).status.code(), Some(2));
    assert_eq!(erw(&["simulate", "--p", "0.9", "--steps", "0"]).status.code(), Some(2));
    assert_eq!(erw(&["gap", "--grid", "-1"]).status.code(), Some(2));
}

#[test]
fn bounds_json_has_seventeen_digit_floats() {
    let out = erw(&["bounds", "--p", "0.9,0.9,0.9"]);
    let text = stdout(&out);
    assert!(text.contains("\"v_lower\": 0.72258533042846707"), "{text}");
    let v = json(&out);
    assert!((v["v_upper"].as_f64().unwrap() - 46020.0 / 63017.0).abs() < 1e-15);
}

#[test]
fn simulate_is_reproducible_and_seeded() {
    let args = ["simulate", "--p", "0.7,0.6", "--steps", "2000", "--replicates", "5", "--seed", "11"];
    let a = stdout(&erw(&args));
    assert_eq!(a, stdout(&erw(&args)));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["seed"], 11);

    let env_seeded = Command::new(env!("CARGO_BIN_EXE_erw"))
        .args(&args[..args.len() - 2])
        .env("ERW_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(stdout(&env_seeded), a);
}

#[test]
fn simulate_csv_has_one_row_per_replicate() {
    let out = erw(&["simulate", "--p", "1,1,1", "--steps", "10", "--replicates", "3", "--format", "csv"]);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "replicate,seed,steps,final_position,speed_estimate");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",10,10,1")));
}

#[test]
fn hitting_deterministic_walk() {
    let v = json(&erw(&["hitting", "--p", "1,1,1", "--target", "50"]));
    assert_eq!(v["hitting_time"], 50);
    assert_eq!(v["speed_estimate"].as_f64(), Some(1.0));
    let v = json(&erw(&["hitting", "--p", "0,0,0", "--target", "5", "--step-cap", "100"]));
    assert_eq!(v["timeouts"], 1);
    assert!(v["hitting_time"].is_null());
}

#[test]
fn kernel_csv_rows_close_with_tail_mass() {
    let text = stdout(&erw(&["kernel", "--p", "0.9,0.9,0.9", "--rows", "3", "--cols", "5"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,j,prob");
    assert_eq!(lines.len(), 1 + 3 * 6);
    for i in 0..3 {
        let total: f64 = lines[1 + i * 6..1 + (i + 1) * 6]
            .iter()
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(lines[(i + 1) * 6].starts_with(&format!("{i},TAIL,")));
    }
}

#[test]
fn stationary_summary_and_csv() {
    let v = json(&erw(&["stationary", "--p", "0.9,0.9,0.9", "--truncation", "100"]));
    for key in ["truncation", "tail_mass_bound", "mean_estimate", "speed_estimate", "genabc_residual"] {
        assert!(!v[key].is_null(), "{key}");
    }
    let speed = v["speed_estimate"].as_f64().unwrap();
    assert!((speed - 1.0 / (1.0 + 2.0 * v["mean_estimate"].as_f64().unwrap())).abs() < 1e-15);

    let text = stdout(&erw(&["stationary", "--p", "1,1,1", "--truncation", "20", "--format", "csv"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,pi_hat");
    assert_eq!(lines[1], "0,1");
    assert_eq!(lines.len(), 21);

    assert_eq!(erw(&["stationary", "--p", "0.5,0.5,0.5"]).status.code(), Some(1));
}

#[test]
fn gap_csv_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    let out = erw(&[
        "gap", "--region", "symmetric", "--grid", "0.01", "--format", "csv", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p,v_lower,v_upper,gap\n"));
    assert!(text.lines().count() > 10);

    let v = json(&erw(&["gap", "--region", "general", "--grid", "0.05", "--lower", "0.6"]));
    assert_eq!(v["argmax"].as_array().unwrap().len(), 3);
    assert_eq!(erw(&["gap", "--region", "general", "--upper", "0.8"]).status.code(), Some(1));
    assert_eq!(erw(&["gap", "--region", "general", "--grid", "0.0001"]).status.code(), Some(2));
}

#[test]
fn verify_passes_and_catches_a_corrupted_kernel() {
    let base = ["verify", "--p", "0.9,0.9,0.9", "--steps", "100000", "--replicates", "20", "--seed", "3"];
    let v = json(&erw(&base));
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 4);

    let mut corrupted = base.to_vec();
    corrupted.extend(["--corrupt-kernel", "0.05"]);
    let out = erw(&corrupted);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["corrupted_kernel"], true);
}
