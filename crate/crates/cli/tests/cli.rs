use std::path::Path;
use std::process::{Command, Output};

use rodeodb_cli::matrix_file::read_matrix;

fn rodeodb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rodeodb")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn generate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    for (p, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let out = rodeodb(&["generate", "sensors", "--t", "50", "--d", "3", "--seed", seed, "--out", s(p)]);
        assert!(out.status.success());
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(read_matrix(&a).unwrap().shape(), (50, 3));
    let meta: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("a.json"))).unwrap();
    assert_eq!((meta["T"].as_u64(), meta["seed"].as_u64()), (Some(50), Some(7)));
}

#[test]
fn bad_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = rodeodb(&["generate", "sensors", "--t", "10", "--d", "0", "--out", s(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    assert_eq!(rodeodb(&["solve"]).status.code(), Some(2));
}

#[test]
fn corrupt_solve_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pts = d.join("pts.csv");
    assert!(rodeodb(&["generate", "sensors", "--t", "150", "--seed", "2", "--out", s(&pts)]).status.success());

    let out = rodeodb(&[
        "corrupt",
        "--points",
        s(&pts),
        "--m",
        "30",
        "--alpha",
        "0.05",
        "--seed",
        "4",
        "--out-dir",
        s(&d.join("c")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s_star = read_matrix(&d.join("c/S_star.csv")).unwrap();
    assert_eq!(s_star.shape(), (30, 120));
    assert_eq!(s_star.iter().filter(|&&v| v != 0.0).count(), (0.05f64 * 29.0 * 120.0 + 1e-9).floor() as usize);
    assert!(s_star.row(0).iter().all(|&v| v == 0.0));
    let split: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("c/split.json")).unwrap()).unwrap();
    assert_eq!(split["anchors"].as_array().unwrap().len(), 30);

    // Same seed, same files.
    rodeodb(&[
        "corrupt",
        "--points",
        s(&pts),
        "--m",
        "30",
        "--alpha",
        "0.05",
        "--seed",
        "4",
        "--out-dir",
        s(&d.join("c2")),
    ]);
    assert_eq!(std::fs::read(d.join("c/F.csv")).unwrap(), std::fs::read(d.join("c2/F.csv")).unwrap());

    let out = rodeodb(&[
        "solve",
        "--e",
        s(&d.join("c/E.csv")),
        "--f",
        s(&d.join("c/F.csv")),
        "--split",
        s(&d.join("c/split.json")),
        "--truth",
        s(&pts),
        "--out-dir",
        s(&d.join("s")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("s/report.json")).unwrap()).unwrap();
    assert_eq!(rep["v"], 1);
    assert_eq!(rep["converged"], true);
    assert!(rep["rmse"].as_f64().unwrap() < 1e-6, "{rep}");
    assert_eq!(rep["eigenvalues_topd"].as_array().unwrap().len(), 2);

    let out = rodeodb(&["eval", "--truth", s(&pts), "--estimate", s(&d.join("s/points_hat.csv"))]);
    let ev: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(ev["recovered"], true);
    assert!((ev["rmse"].as_f64().unwrap() - rep["rmse"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn corrupt_rejects_too_many_anchors() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    rodeodb(&["generate", "sensors", "--t", "20", "--out", s(&pts)]);
    let out = rodeodb(&["corrupt", "--points", s(&pts), "--m", "21", "--alpha", "0.1", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = rodeodb(&["corrupt", "--points", s(&pts), "--m", "5", "--alpha", "1.5", "--out-dir", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_names_mismatched_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("E.csv"), "0,1\n1,0\n").unwrap();
    std::fs::write(d.join("F.csv"), "1,2,3\n4,5,6\n7,8,9\n").unwrap();
    let out = rodeodb(&["solve", "--e", s(&d.join("E.csv")), "--f", s(&d.join("F.csv")), "--out-dir", s(d)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "dimension_mismatch");
    assert!(err["message"].as_str().unwrap().contains("2x2") && err["message"].as_str().unwrap().contains("3x3"));
}

#[test]
fn solve_reports_unconverged_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pts = d.join("p.csv");
    rodeodb(&["generate", "sensors", "--t", "80", "--seed", "1", "--out", s(&pts)]);
    rodeodb(&["corrupt", "--points", s(&pts), "--m", "15", "--alpha", "0.1", "--out-dir", s(d)]);
    let out = rodeodb(&[
        "solve",
        "--e",
        s(&d.join("E.csv")),
        "--f",
        s(&d.join("F.csv")),
        "--max-iter",
        "3",
        "--out-dir",
        s(&d.join("s")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("s/report.json")).unwrap()).unwrap();
    assert_eq!((rep["converged"].as_bool(), rep["stop_reason"].as_str()), (Some(false), Some("max_iter")));
}

#[test]
fn eval_rejects_shape_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("a.csv"), "0,1\n1,0\n2,2\n").unwrap();
    std::fs::write(d.join("b.csv"), "0,1\n1,0\n").unwrap();
    let out = rodeodb(&["eval", "--truth", s(&d.join("a.csv")), "--estimate", s(&d.join("b.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(d.join("c.csv"), "0,1\n1,x\n").unwrap();
    let out = rodeodb(&["eval", "--truth", s(&d.join("a.csv")), "--estimate", s(&d.join("c.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "format");
    let out = rodeodb(&["eval", "--truth", s(&d.join("missing.csv")), "--estimate", s(&d.join("a.csv"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn phase_writes_ordered_log_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"T": 80, "m_values": [8, 16], "alpha_values": [0.0], "trials": 3, "master_seed": 9}"#,
    )
    .unwrap();
    let run = |workers: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_rodeodb"))
            .args(["phase", "--config", s(&d.join("cfg.json")), "--out-dir", s(&d.join(out))])
            .env("RODEODB_WORKERS", workers)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let o = run("1", "a");
    run("3", "b");
    let log = std::fs::read_to_string(d.join("a/results.jsonl")).unwrap();
    assert_eq!(log, std::fs::read_to_string(d.join("b/results.jsonl")).unwrap());
    let keys: Vec<(u64, u64)> = log
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert!(v.get("wall_time_ms").is_none());
            (v["cell"].as_u64().unwrap(), v["trial"].as_u64().unwrap())
        })
        .collect();
    assert_eq!(keys, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
    assert!(std::fs::read_to_string(d.join("a/phase_plot.svg")).unwrap().starts_with("<svg"));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["records"], 6);

    let o = Command::new(env!("CARGO_BIN_EXE_rodeodb"))
        .args(["phase", "--config", s(&d.join("cfg.json")), "--out-dir", s(&d.join("c"))])
        .env("RODEODB_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
