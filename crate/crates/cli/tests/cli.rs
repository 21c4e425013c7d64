use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relaxed_control::io::{read_iterations, read_mixture, read_trajectory};

fn relaxctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaxctl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary_value(line: &str, key: &str) -> f64 {
    line.trim()
        .split(", ")
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from `{line}`"))
        .parse()
        .unwrap()
}

fn out(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn solve_double_tank_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let o = relaxctl(&["solve", "double-tank", "--dt", "0.01", "--iters", "100", "--pwm-cycle", "0.5", "--out", out(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.starts_with("problem=double-tank, dt=0.01, iters=100, "));
    assert!((summary_value(&line, "J0") - 50.5457).abs() <= 0.002 * 50.5457);
    assert!(summary_value(&line, "J_final") <= 4.90);
    assert!(summary_value(&line, "J_projected") <= 1.02 * summary_value(&line, "J_final"));

    let log = read_iterations(fs::File::open(dir.path().join("iterations.csv")).unwrap()).unwrap();
    assert_eq!(log.len(), 100);
    assert_eq!(log[0].cost, summary_value(&line, "J0"));
    let x = read_trajectory(fs::File::open(dir.path().join("final_state.csv")).unwrap()).unwrap();
    assert_eq!(x.x.len(), 1001);
    assert!(x.p.is_some());
    let mu = read_mixture(fs::File::open(dir.path().join("final_control.csv")).unwrap(), 10.0).unwrap();
    assert_eq!(mu.grid().n_steps(), 1000);
    let u = fs::read_to_string(dir.path().join("projected_control.csv")).unwrap();
    assert!(u.starts_with("t,atom_index,weight,u1\n"));
}

#[test]
fn solve_hybrid_matches_the_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve", "hybrid-lqr", "--dt", "0.01", "--iters", "20", "--mode", "general", "--pwm-cycle-steps", "12"];
    let o = relaxctl(&[&args[..], &["--out", out(dir.path())]].concat());
    assert!(o.status.success());
    let line = stdout(&o);
    assert_eq!(summary_value(&line, "J0"), 3.0);
    assert!(summary_value(&line, "J_final") <= 5e-3);
    assert!(summary_value(&line, "J_projected") <= 6e-3);
}

#[test]
fn zero_iterations_keep_the_initial_cost() {
    let dir = tempfile::tempdir().unwrap();
    let o = relaxctl(&["solve", "double-tank", "--iters", "0", "--out", out(dir.path())]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert_eq!(summary_value(&line, "J_final"), summary_value(&line, "J0"));
    assert!(line.contains("J_projected=-"));
    assert!(!dir.path().join("projected_control.csv").exists());
}

#[test]
fn runs_are_deterministic_apart_from_wall_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = relaxctl(&["solve", "hybrid-lqr", "--dt", "0.05", "--iters", "10", "--pwm-cycle-steps", "4", "--out", out(d.path())]);
        assert!(o.status.success());
    }
    for name in ["final_state.csv", "final_control.csv", "projected_control.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let strip = |d: &Path| -> Vec<String> {
        fs::read_to_string(d.join("iterations.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    assert_eq!(strip(a.path()), strip(b.path()));
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short run\nproblem = double-tank\ndt = 0.1\niters = 7\nalpha = 0.2\n").unwrap();
    let o = relaxctl(&["solve", "--config", cfg.to_str().unwrap(), "--iters", "3", "--out", out(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.starts_with("problem=double-tank, dt=0.1, iters=3, "), "{line}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = out(dir.path());
    let cases: [&[&str]; 6] = [
        &["solve", "triple-tank", "--out", d],
        &["solve", "hybrid-lqr", "--mode", "convexified", "--out", d],
        &["solve", "double-tank", "--dt", "-0.1", "--out", d],
        &["solve", "double-tank", "--pwm-cycle", "0.5", "--pwm-cycle-steps", "50"],
        &["table", "4"],
        &["launch"],
    ];
    for args in cases {
        assert_eq!(relaxctl(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("mixture.csv");
    fs::write(&bad, "t,atom_index,weight,u1\n0,0,1,5.0\n").unwrap();
    let o = relaxctl(&["project", "double-tank", bad.to_str().unwrap(), "--pwm-cycle-steps", "1", "--out", out(dir.path())]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn project_reprojects_a_dumped_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = out(dir.path());
    let o = relaxctl(&["solve", "hybrid-lqr", "--iters", "20", "--pwm-cycle-steps", "12", "--out", d]);
    let j_projected = summary_value(&stdout(&o), "J_projected");
    let mixture = dir.path().join("final_control.csv");
    let o = relaxctl(&["project", "hybrid-lqr", mixture.to_str().unwrap(), "--pwm-cycle-steps", "12", "--out", d]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert_eq!(summary_value(&line, "J_projected"), j_projected);
    let o = relaxctl(&["project", "hybrid-lqr", mixture.to_str().unwrap(), "--out", d]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table_two_prints_the_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = relaxctl(&["table", "2", "--out", out(dir.path())]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("2.768e-3") && text.contains("2.956e-3"));
    let csv = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..2], ["0.01", "20"]);
    let projected: f64 = row[4].parse().unwrap();
    assert!(projected <= 6e-3);
}

#[test]
fn checks_pass_on_every_benchmark() {
    for name in ["double-tank", "hybrid-lqr", "mobile-network"] {
        let o = relaxctl(&["check", name]);
        let text = stdout(&o);
        assert!(o.status.success(), "{name}:\n{text}");
        assert!(!text.contains("FAIL"));
        assert!(text.lines().count() >= 6);
    }
    assert!(stdout(&relaxctl(&["check", "mobile-network"])).contains("closed-form costate"));
}
