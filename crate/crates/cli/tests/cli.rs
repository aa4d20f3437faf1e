use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dirac2d(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirac2d"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn selftest_needs_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let r = dirac2d(&["selftest", "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).contains("failed=0"));
    assert!(out.join("manifest.txt").exists());
}

#[test]
fn unknown_pipeline_is_a_usage_error() {
    let r = dirac2d(&["spectrum"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("usage error"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let r = dirac2d(&["free-decay"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn unreadable_config_is_an_io_error() {
    let r = dirac2d(&["classify", "--config", "/nonexistent/run.ini"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn bad_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.ini", "[grid]\nn = 16\nwidth = 2\n");
    let r = dirac2d(&["classify", "--config", &cfg]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 3"));
}

#[test]
fn classify_zero_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.ini", "[grid]\nn = 12\nL = 4\n");
    let out = dir.path().join("o");
    let r = dirac2d(&["classify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("kind=SWaveResonance"));
    let report = fs::read_to_string(out.join("threshold_report.txt")).unwrap();
    assert!(report.contains("SWaveResonance"));
}

#[test]
fn free_decay_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "f.ini",
        "[grid]\nn = 128\nL = 32\n[time]\ndt = 0.1\nt_max = 20\nratio = 1.05\n[smoothing]\ns = 3.6\n[fit]\nt_lo = 4\nt_hi = 20\n",
    );
    let out = dir.path().join("o");
    let r = dirac2d(&["free-decay", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(csv.lines().count() > 20);
    let fit = fs::read_to_string(out.join("fit.txt")).unwrap();
    assert!(fit.contains("exponent="));
}

#[test]
fn wrap_violation_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "w.ini", "[grid]\nn = 32\nL = 4\n[time]\nt_max = 30\n");
    let out = dir.path().join("o");
    let r = dirac2d(&["free-decay", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(4));
    assert!(out.join("manifest.txt").exists());
}
