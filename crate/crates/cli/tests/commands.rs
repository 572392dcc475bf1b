use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gate_core::io::{
    parse_trajectory_csv, read_run, COLUMNS, DIAGNOSTICS_FILE, MANIFEST_FILE, TRAJECTORY_FILE,
};

fn gate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gate"))
        .args(args)
        .env("GATE_LOG_LEVEL", "error")
        .output()
        .expect("spawn gate")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn small_config(dir: &Path) -> PathBuf {
    write_config(dir, "small.json", r#"{"tau_plan": 8, "tau_optim": 16}"#)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    gate(&args)
}

#[test]
fn run_writes_artefacts_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "desk.json",
        r#"{"tau_plan": 20, "tau_optim": 40}"#,
    );
    let out = tmp.path().join("run");
    let o = run(&config, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [TRAJECTORY_FILE, MANIFEST_FILE, DIAGNOSTICS_FILE] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let text = fs::read_to_string(out.join(TRAJECTORY_FILE)).unwrap();
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    let traj = parse_trajectory_csv(&text).unwrap();
    assert_eq!(traj.len(), 1);
    assert_eq!(traj[0].rows.len(), 20);

    let stdout = String::from_utf8_lossy(&o.stdout);
    for needle in [
        "final automated fraction",
        "f reaches 0.5",
        "f reaches 1.0",
        "peak annual output growth",
    ] {
        assert!(
            stdout.contains(needle),
            "summary lacks `{needle}`:\n{stdout}"
        );
    }
    let diag = fs::read_to_string(out.join(DIAGNOSTICS_FILE)).unwrap();
    let values: Vec<f64> = diag
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["value"]
                .as_f64()
                .unwrap()
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn out_of_range_rho_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.json", r#"{"rho": 0.5}"#);
    let o = run(&config, &tmp.path().join("run"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn unparseable_config_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "bad.json", "{ not json");
    assert_eq!(
        run(&config, &tmp.path().join("run"), &[]).status.code(),
        Some(1)
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&config, &a, &["--mode", "unc"]).status.success());
    assert!(run(&config, &b, &["--mode", "unc"]).status.success());
    assert_eq!(
        fs::read(a.join(TRAJECTORY_FILE)).unwrap(),
        fs::read(b.join(TRAJECTORY_FILE)).unwrap()
    );
    assert_eq!(
        fs::read(a.join(DIAGNOSTICS_FILE)).unwrap(),
        fs::read(b.join(DIAGNOSTICS_FILE)).unwrap()
    );
    assert_eq!(
        read_run(&a).unwrap().manifest.hash,
        read_run(&b).unwrap().manifest.hash
    );
}

#[test]
fn compare_against_itself_is_zero_and_has_one_column_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let a = tmp.path().join("a");
    let ext = tmp.path().join("ext");
    assert!(run(&config, &a, &[]).status.success());
    assert!(run(&config, &ext, &["--mode", "ext"]).status.success());

    let self_cmp = gate_cli::cmd_compare(&[a.clone(), a.clone()]).unwrap();
    for s in &self_cmp.series {
        for (_, _, d) in &s.differences {
            assert!(d.iter().all(|v| *v == 0.0 || v.is_nan()), "{}", s.name);
        }
    }

    let three = gate_cli::cmd_compare(&[a.clone(), ext.clone(), a.clone()]).unwrap();
    assert_eq!(three.runs.len(), 3);
    assert!(three
        .series
        .iter()
        .all(|s| s.values.len() == 3 && s.differences.len() == 3));
    let h = three.series.iter().find(|s| s.name == "H").unwrap();
    assert_ne!(h.values[0], h.values[1]);

    let csv_path = tmp.path().join("cmp.csv");
    let o = gate(&[
        "compare",
        a.to_str().unwrap(),
        ext.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let header = fs::read_to_string(&csv_path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("year,Y[a],Y[ext],Y[ext-a]"), "{header}");
    assert_eq!(
        String::from_utf8_lossy(&o.stdout),
        fs::read_to_string(&csv_path).unwrap()
    );
}

#[test]
fn compare_needs_two_runs() {
    let o = gate(&["compare", "only-one"]);
    assert!(!o.status.success());
}

#[test]
fn mismatched_horizons_are_truncated_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let short = write_config(
        tmp.path(),
        "short.json",
        r#"{"tau_plan": 5, "tau_optim": 16}"#,
    );
    let long = small_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&short, &a, &[]).status.success());
    assert!(run(&long, &b, &[]).status.success());
    let cmp = gate_cli::cmd_compare(&[a, b]).unwrap();
    assert_eq!(cmp.years.len(), 5);
    assert_eq!(cmp.warnings.len(), 1);
}

#[test]
fn five_point_sweep_has_five_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tmp.path().join("sweep");
    let o = gate(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--param",
        "t_agi",
        "--grid",
        "log:1e35:1e38:5",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 6);
    assert!(summary.lines().skip(1).all(|l| l.contains(",ok,")));
    for i in 0..5 {
        assert!(out
            .join(format!("point-{i:03}"))
            .join(TRAJECTORY_FILE)
            .is_file());
    }
}

#[test]
fn single_point_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let run_dir = tmp.path().join("run");
    assert!(run(&config, &run_dir, &[]).status.success());
    let out = tmp.path().join("sweep");
    let o = gate(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--param",
        "flop_gap_fraction",
        "--grid",
        "0.55",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(run_dir.join(TRAJECTORY_FILE)).unwrap(),
        fs::read(out.join("point-000").join(TRAJECTORY_FILE)).unwrap()
    );
}

#[test]
fn failing_points_are_recorded_and_the_sweep_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tmp.path().join("sweep");
    let req = gate_cli::SweepRequest {
        config: &config,
        param: "rho",
        grid: &"-0.65,0.5,-0.8".parse().unwrap(),
        mode: gate_core::Mode::Deterministic,
        settings: Default::default(),
        out: &out,
        jobs: 1,
    };
    let points = gate_cli::cmd_sweep(&req).unwrap();
    assert_eq!(points.len(), 3);
    assert!(points[0].summary.is_some());
    assert!(points[1].error.as_deref().unwrap().contains("rho"));
    assert!(points[2].summary.is_some());
}

#[test]
fn unknown_sweep_parameter_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let o = gate(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--param",
        "warp_factor",
        "--grid",
        "1,2",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn t_agi_sweep_trend() {
    // Later full automation with a larger requirement is the expected trend,
    // not a guarantee: re-optimisation may shift investment between points.
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "desk.json",
        r#"{"tau_plan": 20, "tau_optim": 40}"#,
    );
    let req = gate_cli::SweepRequest {
        config: &config,
        param: "t_agi",
        grid: &"log:1e35:1e38:4".parse().unwrap(),
        mode: gate_core::Mode::Deterministic,
        settings: gate_core::SolverSettings {
            starts: 1,
            ..Default::default()
        },
        out: &tmp.path().join("sweep"),
        jobs: 4,
    };
    let points = gate_cli::cmd_sweep(&req).unwrap();
    let years: Vec<f64> = points
        .iter()
        .map(|p| {
            p.summary
                .as_ref()
                .unwrap()
                .year_f_full
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    if years.windows(2).any(|w| w[1] < w[0]) {
        eprintln!("warning: full-automation year not monotone in t_agi: {years:?}");
    }
    assert_eq!(years.len(), 4);
}
