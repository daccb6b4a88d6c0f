use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbrackets"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn check_square_is_simple() {
    let sq = data("square.json");
    let out = run(&["check", "--polytope", sq.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("simple: true"));
}

#[test]
fn check_pyramid_fails() {
    let py = data("pyramid.json");
    let out = run(&["check", "--polytope", py.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not simple"));
}

#[test]
fn constants_json_has_theoretical_offset() {
    let out = run(&["--json", "constants", "--shape", "triangle", "--p", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let u = v["u_theoretical"].as_f64().unwrap();
    assert!((u - 2f64.powi(-24)).abs() < 1e-20, "{u}");
}

#[test]
fn unknown_subcommand_exits_one() {
    assert_eq!(run(&["nope"]).status.code(), Some(1));
}

fn entropy_run(dir: &Path, workers: &str) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "polytope = {:?}\nB = 1.0\np = 2.0\nmode = \"empirical\"\nseed = 7\nsamples = 200\nout = \"out\"\n\n[eps]\nmin = 0.125\nmax = 0.25\nsteps = 2\n",
            data("square.json").to_str().unwrap()
        ),
    )
    .unwrap();
    bin()
        .args(["--workers", workers, "entropy", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap()
}

#[test]
fn entropy_smoke_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = entropy_run(a.path(), "1");
    assert_eq!(ra.status.code(), Some(0), "{}", String::from_utf8_lossy(&ra.stderr));
    let rb = entropy_run(b.path(), "3");
    assert_eq!(rb.status.code(), Some(0), "{}", String::from_utf8_lossy(&rb.stderr));
    for f in ["report.json", "report.csv", "plot.csv", "manifest.json"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f}");
    }
    assert!(a.path().join("out/timing.csv").exists());

    let rep = run(&["report", "--out", a.path().join("out").to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(0), "{}", String::from_utf8_lossy(&rep.stderr));
}
