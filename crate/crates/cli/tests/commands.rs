use std::path::Path;
use std::process::{Command, Output};

fn cpmetric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpmetric")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_algebra_passes() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("s.json");
    let o = cpmetric(&["verify", "--suite", "algebra", "--summary", summary.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() >= 13);
    assert!(!text.contains("FAIL "));
    let s = json(&summary);
    assert_eq!(s["format_version"], 1);
    assert_eq!(s["suite"], "algebra");
    assert_eq!(s["seed"], 42);
    assert_eq!(s["all_pass"], true);
    assert!(s["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_with_a_zero_override_fails() {
    let o = cpmetric(&["verify", "--suite", "algebra", "--threshold", "algebra.sqrt_round_trip=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL algebra.sqrt_round_trip"));
}

#[test]
fn verify_rejects_unknown_names() {
    assert_eq!(cpmetric(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(cpmetric(&["verify", "--suite", "algebra", "--threshold", "algebra.nope=1"]).status.code(), Some(2));
    assert_eq!(cpmetric(&["verify", "--suite", "algebra", "--threshold", "structural"]).status.code(), Some(2));
}

#[test]
fn simo_hughes_demo_drifts_in_det() {
    let o = cpmetric(&["simulate", "--model", "simo_hughes1998", "--demo"]);
    assert_eq!(o.status.code(), Some(0));
    let det = column(&stdout(&o), "det_residual");
    assert_eq!(det.len(), 1001);
    assert!(det[0] < 1e-15);
    assert!(*det.last().unwrap() > 1e-4);
}

#[test]
fn simulate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let summary = dir.path().join("t.json");
    let o = cpmetric(&[
        "simulate",
        "--model",
        "lion1997",
        "--preset",
        "simple_shear",
        "--steps",
        "200",
        "-o",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# format_version: 1\n"));
    assert_eq!(column(&text, "t").len(), 201);
    let s = json(&summary);
    assert_eq!(s["command"], "simulate");
    assert!(s["trajectory"].is_object());
}

#[test]
fn compare_consistent_models() {
    let o = cpmetric(&["compare", "--models", "lion1997,grandi_stefanelli2015"]);
    assert_eq!(o.status.code(), Some(0));
    let dev = column(&stdout(&o), "lion1997~grandi_stefanelli2015");
    assert!(dev.iter().all(|d| *d < 1e-6));
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS"));
}

#[test]
fn compare_flags_an_inconsistent_model() {
    let o = cpmetric(&["compare", "--models", "lion1997,simo_hughes1998", "--scheme", "euler", "--steps", "200"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn usage_errors() {
    assert_eq!(cpmetric(&[]).status.code(), Some(2));
    assert_eq!(cpmetric(&["simulate", "--model", "nope", "--demo"]).status.code(), Some(2));
    assert_eq!(cpmetric(&["simulate", "--model", "simo_hughes1998", "--scheme", "exponential_map"]).status.code(), Some(2));
    assert_eq!(cpmetric(&["simulate", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    assert_eq!(cpmetric(&["sweep", "--param", "nope", "--values", "1"]).status.code(), Some(2));
    assert_eq!(cpmetric(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_file_drives_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "model = \"helm2001\"\nenergy = \"svk\"\n[controls]\nsteps = 100\n").unwrap();
    let o = cpmetric(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout(&o), "t").len(), 101);

    std::fs::write(&cfg, "model = \"helm2001\"\n[material]\neta = -1.0\n").unwrap();
    let o = cpmetric(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("material.eta"));
}

#[test]
fn sweep_tabulates_every_grid_point() {
    let o = cpmetric(&["sweep", "--param", "mu", "--from", "0.5", "--to", "2", "--count", "4", "--models", "lion1997,helm2001", "--steps", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("ok")));
}

#[test]
fn oversized_steps_are_a_numerical_failure() {
    let o = cpmetric(&["simulate", "--model", "lion1997", "--demo", "--steps", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("admissible"));
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_cpmetric"))
            .args(["verify", "--suite", "stress", "--samples", "200"])
            .env("CPMETRIC_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (run("1"), run("3"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}
