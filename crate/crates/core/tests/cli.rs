use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sos(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sos"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("SOS_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files_with(dir: &Path, prefix: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .collect();
    v.sort();
    v
}

#[test]
fn unit_path_gap_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = sos(&["gap", "--L", "1", "--M", "1", "--beta", "2", "--phi0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    // three heights, flat weights, unit rates: the path -1 - 0 - 1 has spectrum {0, 1, 3}
    assert!(stdout(&o).contains("lambda_1 = 1.000000000000"), "{}", stdout(&o));
}

#[test]
fn simulate_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--L", "2", "--M", "1", "--beta", "1", "--horizon", "1000", "--seed", "7"];
    for d in [a.path(), b.path()] {
        assert_eq!(sos(&args, d).status.code(), Some(0));
    }
    let fa = files_with(a.path(), "trajectory");
    let fb = files_with(b.path(), "trajectory");
    assert_eq!(fa.len(), 1);
    assert_eq!(fa[0].file_name(), fb[0].file_name());
    let (ta, tb) = (fs::read(&fa[0]).unwrap(), fs::read(&fb[0]).unwrap());
    assert!(ta.len() > 1000);
    assert_eq!(ta, tb);
}

#[test]
fn check_passes_with_empty_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let o = sos(&["check", "--phi0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("check: PASS"));
}

#[test]
fn reports_start_with_the_config() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sos(&["killed", "--L", "3", "--M", "2", "--seed", "4"], dir.path()).status.code(), Some(0));
    let path = &files_with(dir.path(), "killed")[0];
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("{\"config\":"));
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["config"]["L"], 3);
    assert_eq!(doc["config"]["seed"], 4);
    assert!(doc["report"]["bottom_eigenvalue"].as_f64().unwrap() > 0.0);

    assert_eq!(sos(&["exit-time", "--L", "3", "--M", "2", "--replicas", "50"], dir.path()).status.code(), Some(0));
    let csv = fs::read_to_string(&files_with(dir.path(), "exit-times")[0]).unwrap();
    assert!(csv.starts_with("# config: {"));
    assert_eq!(csv.lines().count(), 52);
}

#[test]
fn echoed_config_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    assert_eq!(sos(&["couple", "--L", "3", "--M", "2", "--horizon", "50", "--seed", "3"], a.path()).status.code(), Some(0));
    let first = &files_with(a.path(), "coupling")[0];
    let b = tempfile::tempdir().unwrap();
    let o = sos(&["couple", "--config", first.to_str().unwrap()], b.path());
    assert_eq!(o.status.code(), Some(0));
    let second = &files_with(b.path(), "coupling")[0];
    assert_eq!(first.file_name(), second.file_name());
    assert_eq!(fs::read(first).unwrap(), fs::read(second).unwrap());
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = sos(&["gap", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = sos(&["gap", "--beta", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`beta`"));

    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"L": 0}"#).unwrap();
    let o = sos(&["gap", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`L`"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("cat.json");
    // decay mass far too large for the weight
    fs::write(&cat, r#"{"decay_mass": 5.0, "shapes": [{"sites": [["1/2", "1/2"], ["3/2", "1/2"]], "weight": 0.5}]}"#).unwrap();
    let o = sos(&["check", "--catalog", cat.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("check: FAIL"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decay"));
}
