use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn slantcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slantcheck")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn machine(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

#[test]
fn example_7_2_passes() {
    let o = slantcheck(&["verify", "--fixture", "example_7_2", "--format", "machine"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = machine(&o);
    assert_eq!(r["counts"]["fail"], 0);
    assert_eq!(r["counts"]["pass"], 16);
    let dichotomy = r["checks"].as_array().unwrap().iter().find(|c| c["check"] == "dichotomy").unwrap();
    assert_eq!(dichotomy["details"]["verdict"], "QUASI_HEMI_SLANT");
}

#[test]
fn example_7_1_reports_failures_with_exit_one() {
    let o = slantcheck(&["verify", "--fixture", "example_7_1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("DISCREPANCY g(u,w) = 0"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("quasi_bi_slant") && l.contains("FAIL")), "{text}");
}

#[test]
fn machine_report_matches_golden() {
    let o = slantcheck(&["verify", "--fixture", "example_7_2", "--format", "machine"]);
    let path = golden("example_7_2.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &o.stdout).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden file; regenerate with UPDATE_GOLDEN=1");
    assert_eq!(stdout(&o), want);
}

#[test]
fn runs_are_byte_identical_across_modes() {
    let a = slantcheck(&["verify", "--fixture", "fixture_7_1_corrected", "--format", "machine"]);
    let b = slantcheck(&["verify", "--fixture", "fixture_7_1_corrected", "--format", "machine"]);
    let s = slantcheck(&["verify", "--fixture", "fixture_7_1_corrected", "--format", "machine", "--mode", "sequential"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, s.stdout);
}

#[test]
fn dumped_fixture_verifies_like_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let dump = slantcheck(&["dump-fixture", "polar_warp:0.9"]);
    assert_eq!(dump.status.code(), Some(0));
    std::fs::write(&path, &dump.stdout).unwrap();
    let out = dir.path().join("report.json");
    let from_file = slantcheck(&["verify", path.to_str().unwrap(), "--format", "machine", "--out", out.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    assert!(from_file.stdout.is_empty());
    let direct = slantcheck(&["verify", "--fixture", "polar_warp:0.9", "--format", "machine"]);
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
}

#[test]
fn seed_and_check_selection() {
    let o = slantcheck(&["verify", "--fixture", "slant_plane:0.4", "--format", "machine", "--seed", "7", "--checks", "dichotomy,ambient"]);
    let r = machine(&o);
    assert_eq!(r["manifest"]["samples"]["seed"], 7);
    let names: Vec<&str> = r["checks"].as_array().unwrap().iter().map(|c| c["check"].as_str().unwrap()).collect();
    assert_eq!(names, ["ambient", "dichotomy"]);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify"][..],
        &["verify", "--fixture", "no_such_fixture"],
        &["verify", "--fixture", "slant_plane:abc"],
        &["verify", "--fixture", "slant_plane", "--checks", "bogus"],
        &["verify", "/nonexistent/manifest.json"],
        &["frobnicate"],
    ] {
        let o = slantcheck(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn malformed_manifest_points_at_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "x", "ambient_dimension": 1, "parameters": ["u"], "immersion": ["u", "q"]}"#).unwrap();
    let o = slantcheck(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("immersion[1]"), "{}", stderr(&o));
}

#[test]
fn listings() {
    let f = stdout(&slantcheck(&["list-fixtures"]));
    assert_eq!(f.lines().count(), 10);
    assert!(f.contains("fixture_7_1_corrected"));
    let c = stdout(&slantcheck(&["list-checks"]));
    assert_eq!(c.lines().next(), Some("ambient"));
    assert_eq!(c.lines().last(), Some("dichotomy"));
}
