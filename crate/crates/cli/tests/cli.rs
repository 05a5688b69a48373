//! Exit codes, output contents and cleanup of the `rspim` binary.

use std::ffi::OsStr;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rspim<S: AsRef<OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rspim")).args(args).env("RSPIM_THREADS", "2").output().unwrap()
}

/// Two strong signals in the first columns, the rest noise.
fn write_data(dir: &Path, n: usize, p: usize) {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut unif = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut x = (0..p).map(|j| format!("v{j}")).collect::<Vec<_>>().join(",") + "\n";
    let mut y = String::new();
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| 3.0 * unif()).collect();
        y += &format!("{}\n", 2.0 * row[0] - 1.5 * row[1] + unif());
        x += &row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        x.push('\n');
    }
    fs::write(dir.join("x.csv"), x).unwrap();
    fs::write(dir.join("y.csv"), y).unwrap();
}

fn paths(dir: &Path) -> (String, String) {
    (dir.join("x.csv").display().to_string(), dir.join("y.csv").display().to_string())
}

#[test]
fn analyze_reports_selected_coordinates() {
    let tmp = tempfile::tempdir().unwrap();
    write_data(tmp.path(), 150, 12);
    let (x, y) = paths(tmp.path());
    let out = tmp.path().join("run");
    let o = rspim(&["analyze", "--x", &x, "--y", &y, "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("intervals.json")).unwrap()).unwrap();
    assert_eq!(report["splits"], 10);
    let coords = report["coordinates"].as_array().unwrap();
    let first = coords.iter().find(|c| c["coord"] == 0).expect("coordinate 0 selected");
    assert_eq!(first["name"], "v0");
    let f = first["selection_frequency"].as_f64().unwrap();
    assert!(f > 0.0 && f <= 1.0);
    let segs = first["intervals"].as_array().unwrap();
    assert!(segs.iter().any(|s| s["lo"].as_f64().unwrap() < 2.0 && 2.0 < s["hi"].as_f64().unwrap()));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 1);
    assert_eq!(manifest["outputs"], serde_json::json!(["intervals.json", "manifest.json"]));
}

#[test]
fn contour_has_split_and_max_series() {
    let tmp = tempfile::tempdir().unwrap();
    write_data(tmp.path(), 150, 12);
    let (x, y) = paths(tmp.path());
    let out = tmp.path().join("c");
    let o = rspim(&[
        "contour",
        "--x",
        &x,
        "--y",
        &y,
        "--coord",
        "1",
        "--grid",
        "-3:0:31",
        "--splits",
        "4",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("contour.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,plausibility,series"));
    let rows: Vec<(f64, f64, String)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect();
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.1)));
    let max: Vec<&(f64, f64, String)> = rows.iter().filter(|r| r.2 == "max").collect();
    assert!(max.len() >= 31);
    for m in &max {
        let best = rows.iter().filter(|r| r.2 != "max" && r.0 == m.0).map(|r| r.1).fold(0.0, f64::max);
        assert_eq!(best, m.1);
    }
    assert!(max.iter().any(|m| m.1 == 1.0));
}

#[test]
fn unselected_coordinate_exits_with_not_available() {
    let tmp = tempfile::tempdir().unwrap();
    write_data(tmp.path(), 150, 12);
    let (x, y) = paths(tmp.path());
    let out = tmp.path().join("none");
    let args = |coord: usize| {
        vec![
            "contour".to_string(),
            "--x".into(),
            x.clone(),
            "--y".into(),
            y.clone(),
            "--selector".into(),
            "random".into(),
            "--k".into(),
            "1".into(),
            "--splits".into(),
            "1".into(),
            "--coord".into(),
            coord.to_string(),
            "--grid".into(),
            "-1:1:5".into(),
            "--seed".into(),
            "4".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let codes: Vec<i32> = (0..12).map(|j| rspim(&args(j)).status.code().unwrap()).collect();
    assert_eq!(codes.iter().filter(|&&c| c == 0).count(), 1);
    assert_eq!(codes.iter().filter(|&&c| c == 4).count(), 11);
    let o = rspim(&args(12));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_configuration_exits_with_code_two_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    write_data(tmp.path(), 40, 5);
    let (x, _) = paths(tmp.path());
    let out = tmp.path().join("bad");
    let o = rspim(&["analyze", "--x", &x, "--y", &x, "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("one column"));
    assert!(!out.exists());

    let o = rspim(&["simulate", "--module", "A", "--alpha", "1.5", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o =
        rspim(&["analyze", "--x", &x, "--y", &x, "--method", "single", "--splits", "3", "--seed", "1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_report_and_replications() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let o = rspim(&["simulate", "--module", "A", "--reps", "20", "--seed", "9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["replications"], 20);
    let cov = report["conditional_coverage"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&cov));
    let csv = fs::read_to_string(out.join("replications.csv")).unwrap();
    assert!(csv.lines().count() > 20);
}
