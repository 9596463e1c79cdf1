use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn linecloud(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linecloud")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_cube(dir: &Path) -> String {
    let cloud = linecloud::scene::generate_scene(linecloud::scene::SceneKind::Cube, 0.02, 0.0, 1)
        .unwrap()
        .cloud;
    let path = dir.join("cube.xyz");
    linecloud::io::write_xyz(&cloud, &path).unwrap();
    path.to_str().unwrap().to_owned()
}

fn without_timing(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&linecloud(&["--help"])), 0);
    assert_eq!(code(&linecloud(&["--version"])), 0);
}

#[test]
fn usage_and_input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    assert_eq!(code(&linecloud(&["detect"])), 1);
    assert_eq!(code(&linecloud(&["frobnicate"])), 1);

    let missing = linecloud(&["detect", "--input", "/nonexistent/p.xyz", "--output", out]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    let bad = dir.path().join("bad.xyz");
    std::fs::write(&bad, "0 0 0\nnan 1 1\n").unwrap();
    assert_eq!(code(&linecloud(&["detect", "--input", bad.to_str().unwrap(), "--output", out])), 1);

    let cube = write_cube(dir.path());
    assert_eq!(code(&linecloud(&["detect", "--input", &cube, "--output", out, "--k", "2"])), 1);
    assert_eq!(code(&linecloud(&["detect", "--input", &cube, "--output", out, "--output-format", "svg"])), 1);
    assert_eq!(code(&linecloud(&["bench", "--scene", "teapot"])), 1);

    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "k = 20\nunknown_key = 3\n").unwrap();
    let cfg_run = linecloud(&["detect", "--input", &cube, "--output", out, "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&cfg_run), 1);
    assert!(String::from_utf8_lossy(&cfg_run.stderr).contains(":2:"));
}

#[test]
fn detect_writes_every_output_format() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube(dir.path());
    let json = dir.path().join("r.json");
    let run = linecloud(&[
        "detect", "--input", &cube, "--output", json.to_str().unwrap(), "--emit-labels", "--emit-planes",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let result = linecloud::io::load_result(&json).unwrap();
    assert_eq!(result.planes.len(), 6);
    assert_eq!(result.segments.len(), 12);

    let labels = std::fs::read_to_string(dir.path().join("r_labels.xyz")).unwrap();
    assert_eq!(labels.lines().count(), result.point_count);
    let planes_dir = dir.path().join("r_planes");
    assert!(planes_dir.join("plane_0000.pbm").exists());
    assert!(planes_dir.join("plane_0000_segments.txt").exists());

    for (fmt, ext) in [("obj", "obj"), ("csv", "csv")] {
        let path = dir.path().join(format!("r.{ext}"));
        let run = linecloud(&["detect", "--input", &cube, "--output", path.to_str().unwrap(), "--output-format", fmt]);
        assert_eq!(code(&run), 0);
        assert!(std::fs::metadata(&path).unwrap().len() > 0);
    }
}

#[test]
fn json_is_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube(dir.path());
    let outputs: Vec<Value> = ["1", "1", "4"]
        .iter()
        .enumerate()
        .map(|(i, threads)| {
            let path = dir.path().join(format!("r{i}.json"));
            let run = linecloud(&["detect", "--input", &cube, "--output", path.to_str().unwrap(), "--threads", threads]);
            assert_eq!(code(&run), 0);
            without_timing(&path)
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn disabling_postprocess_keeps_more_segments() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube(dir.path());
    let on = dir.path().join("on.json");
    let off = dir.path().join("off.json");
    assert_eq!(code(&linecloud(&["detect", "--input", &cube, "--output", on.to_str().unwrap()])), 0);
    assert_eq!(
        code(&linecloud(&["detect", "--input", &cube, "--output", off.to_str().unwrap(), "--no-postprocess"])),
        0
    );
    let count = |p: &Path| linecloud::io::load_result(p).unwrap().segments.len();
    assert!(count(&off) >= count(&on));
}

#[test]
fn bench_then_eval_agree() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("r.json");
    let truth = dir.path().join("t.json");
    let run = linecloud(&[
        "bench", "--scene", "cube", "--spacing", "0.02", "--seed", "3",
        "--output", result.to_str().unwrap(), "--truth-output", truth.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let summary: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(summary["edges_total"], 12);
    assert_eq!(summary["edges_recovered"], 12);

    let eval = linecloud(&["eval", "--result", result.to_str().unwrap(), "--truth", truth.to_str().unwrap(), "--tol", "0.1"]);
    assert_eq!(code(&eval), 0);
    let report: Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert_eq!(report["edges_recovered"], 12);
    assert_eq!(report["recall"], 1.0);
}

#[test]
fn detect_reads_config_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_cube(dir.path());
    let cfg = dir.path().join("c.cfg");
    // A huge plane minimum removes every plane; the flag restores the default.
    std::fs::write(&cfg, "# tuned\nmin_plane_points = 100000\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let empty = dir.path().join("empty.json");
    let restored = dir.path().join("restored.json");
    assert_eq!(code(&linecloud(&["detect", "--input", &cube, "--output", empty.to_str().unwrap(), "--config", cfg])), 0);
    assert_eq!(
        code(&linecloud(&[
            "detect", "--input", &cube, "--output", restored.to_str().unwrap(), "--config", cfg,
            "--min-plane-points", "30",
        ])),
        0
    );
    assert!(linecloud::io::load_result(&empty).unwrap().segments.is_empty());
    assert_eq!(linecloud::io::load_result(&restored).unwrap().planes.len(), 6);
}
