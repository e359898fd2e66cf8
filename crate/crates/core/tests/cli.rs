use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracvar::cli::output::ColumnTable;

fn fracvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracvar")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let cfg = configs().join("ex2.conf");
    let out = fracvar(&["solve", "--config", cfg.to_str().unwrap(), "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("0.0937500  0.1250000  0.0937500"), "{stdout}");
    assert!(stdout.contains("1 extremals"));

    let table = ColumnTable::read(&csv).unwrap();
    assert_eq!(table.header, vec!["t", "candidate_1"]);
    for row in &table.rows {
        let (t, y) = (row[0].unwrap(), row[1].unwrap());
        assert!((y - 0.5 * t * (1.0 - t)).abs() <= 1e-10);
    }
}

#[test]
fn invalid_order_is_a_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "a=0\nb=1\nh=0.25\nalpha=1.5\nlagrangian=0.5*v^2\nleft_bc=0\nright_bc=0\n");
    let csv = dir.path().join("out.csv");
    let out = fracvar(&["solve", "--config", cfg.to_str().unwrap(), "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
    assert!(!csv.exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));
}

#[test]
fn missing_config_and_unknown_flags_are_usage_errors() {
    assert_eq!(fracvar(&["solve", "--config", "/nonexistent/x.conf"]).status.code(), Some(64));
    assert_eq!(fracvar(&["solve"]).status.code(), Some(64));
    assert_eq!(fracvar(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(fracvar(&["sweep", "ex4"]).status.code(), Some(64));
    assert_eq!(fracvar(&["--help"]).status.code(), Some(0));
}

#[test]
fn problem_without_extremals_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "lin.conf", "a=0\nb=1\nh=0.25\nalpha=0.5\nlagrangian=u\nleft_bc=0\nright_bc=0\nn_starts=5\n");
    let csv = dir.path().join("out.csv");
    let out = fracvar(&["solve", "--config", cfg.to_str().unwrap(), "--output", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!csv.exists());
}

#[test]
fn check_passes_and_repeats() {
    let a = fracvar(&["check", "--seed", "7", "--instances", "40"]);
    let b = fracvar(&["check", "--seed", "7", "--instances", "40"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(String::from_utf8(a.stdout).unwrap().lines().count(), 6);
}

#[test]
fn check_detects_corrupted_kernel() {
    let out = fracvar(&["check", "--instances", "20", "--inject-kernel-error"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn solve_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ex3_theta1.conf");
    let mut files = Vec::new();
    let mut reports = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("{i}.csv"));
        let out = fracvar(&["solve", "--config", cfg.to_str().unwrap(), "--output", csv.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0));
        reports.push(out.stdout);
        files.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn sweep_accepts_fraction_lists_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("{i}.csv"));
        let out = fracvar(&["sweep", "ex1", "--h", "1/4,1/8", "--starts", "3", "--output", csv.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let table = ColumnTable::read(&dir.path().join("0.csv")).unwrap();
    assert_eq!(table.header, vec!["t", "y(h=1/4)", "dev(h=1/4)", "y(h=1/8)", "dev(h=1/8)"]);
    assert_eq!(table.rows.len(), 9);
    // h = 1/8 points between the coarse ones have no coarse value
    assert_eq!(table.rows[1][1], None);
    assert!(table.rows[1][3].is_some());
}

#[test]
fn sweep_rejects_steps_that_do_not_divide_the_interval() {
    let out = fracvar(&["sweep", "ex2", "--h", "0.3"]);
    assert_eq!(out.status.code(), Some(64));
}
