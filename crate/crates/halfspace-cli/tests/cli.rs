use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfspace")).args(args).current_dir(cwd).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_command_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "no_such_key = 3\n").unwrap();
    let o = run(&["kernel-check", "--config", "c.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["kernel-check", "--suite", "solve"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn kernel_check_writes_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kernel-check", "--out", "a", "--seed", "19"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("a/kernel-check.json"));
    assert_eq!(v["seed"], 19);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(!v["exponents"].as_object().unwrap().is_empty() || !v["grids"].as_object().unwrap().is_empty());
    let csv = std::fs::read_to_string(dir.path().join("a/kernel-check.csv")).unwrap();
    assert!(csv.starts_with("suite,seed,criterion"));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("kernel-check,19,")));
}

#[test]
fn zero_data_solve_converges_at_first_iterate() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("z.toml"), "solver_zero_data = true\n").unwrap();
    let o = run(&["solve", "--config", "z.toml", "--out", "z", "--verbose"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(o.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let iters: Vec<_> = lines.iter().filter(|l| l["record"] == "iteration").collect();
    assert_eq!(iters.len(), 1);
    assert_eq!(iters[0]["data"]["iteration"], 1);
    let v = json(&dir.path().join("z/solve.json"));
    assert_eq!(v["data"]["diagnostics"]["converged"], true);
    assert!(v["grids"]["solver"].is_object());
    assert!(dir.path().join("z/solve_decay.csv").is_file());

    // the trivial run is a warning, which --strict turns into a failure
    let o = run(&["solve", "--config", "z.toml", "--out", "z", "--strict"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report", "--out", "."], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for s in ["kernel-check", "tent-suite", "freq-suite", "green-suite", "linear-suite", "gbeta-suite", "solve", "scaling-check"] {
        assert!(err.contains(s), "{err}");
    }
}
