//! The command-line binary end to end.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pmsm-mpc"))
}

#[test]
fn run_writes_one_trace_per_solver() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["run", "fig8b", "--solver", "both", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for solver in ["lp", "qp"] {
        let text = std::fs::read_to_string(dir.path().join(format!("fig8b-{solver}.csv"))).unwrap();
        assert!(text.starts_with("time,omega,i_d,i_q,u_d,u_q"));
        assert_eq!(text.lines().count(), 121);
    }
}

#[test]
fn run_is_deterministic_across_processes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(bin().args(["run", "k-plus-10", "--out"]).arg(d.path()).status().unwrap().success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("k-plus-10-lp.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn scenario_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.toml");
    std::fs::write(
        &path,
        "name = \"custom\"\nmode = \"torque-control\"\nduration = 0.005\nspeed_rpm = 500.0\n\
         schedule = [{ time = 0.0, value = 3.0 }]\n",
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&path)
        .args(["--set", "horizon=0.001", "--set", "plant.r=1.0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("custom-lp.csv").exists());
}

#[test]
fn divergence_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "fig8b", "--set", "plant.l_d=1e-5", "--set", "plant.l_q=1e-5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_override_is_an_error() {
    let out = bin().args(["run", "fig8b", "--set", "nonsense=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "no-such-scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_and_report_print_tables() {
    let out = bin().args(["sweep", "--scenario", "fig8b", "--horizons", "1,2"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("horizon_ms,loss_weight,cost"));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eff.csv");
    let out = bin().args(["report", "--speeds", "2000", "--out"]).arg(&csv).output().unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("2000,10.5,-1.363"));
}

#[test]
fn compare_summarizes_both_solvers() {
    let out = bin().args(["compare", "fig9b"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("QP i_d excursion"));
    assert!(text.contains("per-cycle J_LP - J_QP"));
}
