//! End-to-end tests of the compiled binary: output schemas, reference
//! values, determinism, and exit codes.

use std::process::{Command, Output};

const DEMO_PHASES: &str = "10/11:1,1/11:0.1";

fn tlps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlps"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .expect("UTF-8 output")
        .lines()
        .map(str::to_string)
        .collect()
}

fn field(line: &str, idx: usize) -> f64 {
    line.split(',').nth(idx).expect("column present").parse().expect("numeric field")
}

#[test]
fn curve_emits_all_routes_with_nonnegative_gap() {
    let out = tlps(&[
        "curve",
        "--phases",
        DEMO_PHASES,
        "--lambda",
        "0.5",
        "--theta-max",
        "10",
        "--theta-steps",
        "11",
    ]);
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "theta,t_linear,t_series,t_upper,delta");
    assert_eq!(lines.len(), 12);
    // At θ=0 every column equals the PS value and the gap vanishes.
    assert_eq!(field(&lines[1], 0), 0.0);
    assert_eq!(field(&lines[1], 1), 20.0);
    assert_eq!(field(&lines[1], 2), 20.0);
    assert_eq!(field(&lines[1], 3), 20.0);
    assert_eq!(field(&lines[1], 4), 0.0);
    for row in &lines[1..] {
        assert!(field(row, 4) >= 0.0, "negative gap in {row}");
        assert!((field(row, 1) - field(row, 2)).abs() <= 1e-9);
    }
}

#[test]
fn curve_single_method_column() {
    let out = tlps(&[
        "curve",
        "--phases",
        DEMO_PHASES,
        "--rho",
        "10/11",
        "--method",
        "twophase",
        "--theta-max",
        "5",
        "--theta-steps",
        "6",
    ]);
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "theta,t_twophase");
    assert_eq!(lines.len(), 7);
}

#[test]
fn table_reproduces_the_ten_phase_row() {
    let out = tlps(&[
        "table",
        "--n-list",
        "10",
        "--theta-max",
        "30",
        "--theta-steps",
        "61",
    ]);
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "n,eta,d,theta_opt,max_gain_percent,max_delta");
    assert_eq!(lines.len(), 2);
    assert_eq!(field(&lines[1], 0), 10.0);
    assert!((field(&lines[1], 1) - 0.95).abs() <= 0.01);
    assert!((field(&lines[1], 2) - 7.20).abs() <= 0.05);
    assert!((field(&lines[1], 3) - 5.0).abs() <= 1.0);
    assert!((field(&lines[1], 4) - 32.98).abs() <= 0.5);
}

#[test]
fn twophase_summary_has_reference_values() {
    let out = tlps(&[
        "twophase",
        "--phases",
        DEMO_PHASES,
        "--lambda",
        "1/2",
        "--theta-max",
        "10",
        "--theta-steps",
        "3",
    ]);
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "quantity,value");
    let lookup = |name: &str| -> f64 {
        lines
            .iter()
            .find_map(|l| l.strip_prefix(&format!("{name},")))
            .unwrap_or_else(|| panic!("{name} row missing"))
            .parse()
            .expect("numeric value")
    };
    assert!((lookup("theta_tilde") - 4.45259).abs() <= 1e-4);
    assert_eq!(lookup("c1"), 9.0);
    assert_eq!(lookup("t_ps"), 20.0);
    assert!(lookup("gain_half_theta") <= lookup("gain"));
    assert!(lookup("gain_three_halves_theta") <= lookup("gain"));
    // The curve section follows after a separating blank line.
    let blank = lines.iter().position(|l| l.is_empty()).expect("separator");
    assert_eq!(lines[blank + 1], "theta,t_twophase");
}

#[test]
fn twophase_load_sweep_gain_grows_toward_high_load() {
    let out = tlps(&[
        "twophase",
        "--phases",
        DEMO_PHASES,
        "--rho",
        "10/11",
        "--theta-max",
        "5",
        "--theta-steps",
        "2",
        "--rho-sweep",
        "0.3,0.7,0.99",
    ]);
    let lines = stdout_lines(&out);
    let header = lines
        .iter()
        .position(|l| l == "rho,gain,gain_half_theta,gain_three_halves_theta")
        .expect("sweep section present");
    let gains: Vec<f64> = lines[header + 1..header + 4]
        .iter()
        .map(|l| field(l, 1))
        .collect();
    assert!(gains[0] < gains[1] && gains[1] < gains[2]);
    assert!((0.40..0.50).contains(&gains[2]));
}

#[test]
fn simulate_is_deterministic_and_consistent() {
    let args = [
        "simulate",
        "--phases",
        DEMO_PHASES,
        "--lambda",
        "0.3",
        "--theta",
        "2",
        "--jobs",
        "4000",
        "--warmup",
        "200",
        "--reps",
        "3",
        "--seed",
        "11",
    ];
    let first = tlps(&args);
    let second = tlps(&args);
    assert_eq!(first.stdout, second.stdout, "same seed must give same bytes");
    let lines = stdout_lines(&first);
    assert_eq!(lines[0], "replication,mean_sojourn");
    let summary = lines
        .iter()
        .position(|l| l == "mean_sojourn,ci99_halfwidth,analytic,inside_ci")
        .expect("summary section");
    let row: Vec<&str> = lines[summary + 1].split(',').collect();
    assert!(row[3] == "true" || row[3] == "false");
    let buckets = lines
        .iter()
        .position(|l| l == "x_lo,x_hi,mean_sojourn,ci99_halfwidth,count")
        .expect("bucket section");
    assert_eq!(lines.len() - buckets - 1, 11);
}

#[test]
fn simulate_mm1_matches_theory() {
    let out = tlps(&[
        "simulate",
        "--phases",
        "1:1",
        "--lambda",
        "0.5",
        "--theta",
        "1",
        "--jobs",
        "40000",
        "--warmup",
        "1000",
        "--reps",
        "5",
        "--seed",
        "3",
    ]);
    let lines = stdout_lines(&out);
    let summary = lines
        .iter()
        .position(|l| l.starts_with("mean_sojourn,"))
        .expect("summary header");
    let row = &lines[summary + 1];
    assert!((field(row, 2) - 2.0).abs() <= 1e-9);
    assert_eq!(row.split(',').nth(3), Some("true"));
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("curve.csv");
    let out = tlps(&[
        "curve",
        "--phases",
        DEMO_PHASES,
        "--lambda",
        "0.5",
        "--theta-max",
        "4",
        "--theta-steps",
        "3",
        "--out",
        path.to_str().expect("utf-8 path"),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let content = std::fs::read_to_string(&path).expect("file written");
    assert!(content.starts_with("theta,t_linear,t_series,t_upper,delta\n"));
    assert!(!content.contains('\r'), "LF endings only");
}

#[test]
fn trace_flag_writes_an_event_log() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("trace.csv");
    let out = tlps(&[
        "simulate",
        "--phases",
        DEMO_PHASES,
        "--lambda",
        "0.3",
        "--theta",
        "2",
        "--jobs",
        "500",
        "--warmup",
        "0",
        "--reps",
        "1",
        "--seed",
        "8",
        "--trace",
        path.to_str().expect("utf-8 path"),
    ]);
    assert!(out.status.success());
    let content = std::fs::read_to_string(&path).expect("trace written");
    let lines: Vec<&str> = content.lines().collect();
    assert_eq!(lines[0], "time,event,job_id,queue,attained");
    assert!(lines.len() > 500);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
}

#[test]
fn bad_invocations_exit_two() {
    for args in [
        vec!["curve", "--lambda", "0.5"],
        vec!["curve", "--phases", DEMO_PHASES],
        vec!["curve", "--phases", DEMO_PHASES, "--lambda", "0.4", "--rho", "0.9"],
        vec!["curve", "--phases", "1:1", "--family", "10,2.5,1.2", "--lambda", "0.5"],
        vec!["curve", "--phases", "1:1", "--lambda", "0.5", "--tol", "0"],
        vec!["twophase", "--phases", "1:1", "--lambda", "0.5"],
        vec!["simulate", "--phases", "1:1", "--lambda", "0.5", "--theta", "1", "--jobs", "10", "--warmup", "10"],
    ] {
        let out = tlps(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
    }
}

#[test]
fn unstable_models_exit_four() {
    for args in [
        vec!["curve", "--phases", "1:1", "--lambda", "1.5"],
        vec!["simulate", "--phases", "1:1", "--rho", "1.2", "--theta", "1"],
        vec![
            "twophase", "--phases", DEMO_PHASES, "--rho", "0.9", "--theta-max", "5",
            "--theta-steps", "2", "--rho-sweep", "0.5,1.1",
        ],
    ] {
        let out = tlps(&args);
        assert_eq!(out.status.code(), Some(4), "args {args:?}");
    }
}
