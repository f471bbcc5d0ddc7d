use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gazekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazekit")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn replay_prints_tables() {
    let out = gazekit(&["replay", "--input", &data("pixel_targets.csv")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("35.46"), "{text}");
    assert!(text.contains("189.6"), "{text}");
}

#[test]
fn usage_and_input_errors_have_distinct_codes() {
    assert_eq!(gazekit(&["replay", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(gazekit(&["evaluate", "--pipeline", "3"]).status.code(), Some(1));
    let missing = gazekit(&["replay", "--input", "/nonexistent/fixture.csv"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());
    assert_eq!(gazekit(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = gazekit(&["synth", "--kind", "eye", "--output", s(d), "--seed", "9", "--count", "2", "--noise", "3"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["eye_0000.png", "eye_0001.png", "eye_0001.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }
}

#[test]
fn calibrate_then_track_on_rig_frames() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.json");
    let out = gazekit(&["calibrate", "--output", s(&cal), "--frames", "3", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let frames = dir.path().join("frames");
    let out = gazekit(&["synth", "--kind", "rig", "--output", s(&frames), "--target", "900,200", "--count", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let csv_path = dir.path().join("track.csv");
    let out =
        gazekit(&["track", "--calibration", s(&cal), "--input", s(&frames), "--output", s(&csv_path), "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["frame", "x", "y", "raw_x", "raw_y", "confidence"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let x: f64 = r[1].parse().unwrap();
        let y: f64 = r[2].parse().unwrap();
        assert!((x - 900.0).hypot(y - 200.0) < 15.0, "{r:?}");
    }
}

#[test]
fn calibration_file_is_rejected_when_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.json");
    std::fs::write(&cal, "{\"version\": 99}").unwrap();
    let out = gazekit(&["track", "--calibration", s(&cal), "--input", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}
