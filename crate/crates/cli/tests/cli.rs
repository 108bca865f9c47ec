use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn quasispec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quasispec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is one JSON document")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn solve_free_potential() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "zero.json", "{}");
    let o = quasispec(&["--potential", &pot, "--command", "solve", "--n", "5", "--out", "run"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&dir.path().join("run/spectrum.csv"));
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        let n = (k + 1) as f64;
        let re: f64 = row[1].parse().unwrap();
        let im: f64 = row[2].parse().unwrap();
        assert!((re - n * n).abs() < 1e-10 && im.abs() < 1e-10);
        assert_eq!(row[5], "1");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/solve.json")).unwrap()).unwrap();
    let meta = &report["meta"];
    assert_eq!(meta["potential_sha256"].as_str().unwrap().len(), 64);
    assert!(meta["norm_convention"].as_str().unwrap().contains("sigma"));
    assert!(meta["tolerances"]["tol_root"].as_f64().unwrap() > 0.0);
    assert!(meta["core_version"].is_string());
}

#[test]
fn asymptotics_of_a_constant_potential() {
    // u = 2x, q = 2: rho_n = sqrt(n^2 + 2)
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "lin.json", r#"{"pieces":[{"from":0,"to":3.141592653589793,"poly":[0,2]}]}"#);
    let o = quasispec(
        &["--potential", &pot, "--command", "asymptotics", "--n", "50", "--sigma", "0.25", "--out", "run"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&dir.path().join("run/remainders.csv"));
    assert_eq!(rows.len(), 50);
    for row in &rows {
        let n: f64 = row[0].parse().unwrap();
        let s: f64 = row[1].parse().unwrap();
        assert!((s - ((n * n + 2.0).sqrt() - n)).abs() < 1e-8, "n = {n}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/asymptotics.json")).unwrap()).unwrap();
    // |rho_n - n| < 1/4 from n = 4 on
    assert_eq!(report["efas"]["start"], 4);
    assert_eq!(csv_rows(&dir.path().join("run/efas.csv")).len(), 47);
}

#[test]
fn sweep_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| {
        vec!["--command", "sweep", "--radius", "1", "--sigma", "0.25", "--samples", "20", "--seed", "7", "--n", "12", "--out", out]
    };
    let a = quasispec(&args("a"), dir.path());
    let b = Command::new(env!("CARGO_BIN_EXE_quasispec"))
        .args(args("b"))
        .current_dir(dir.path())
        .env("QUASISPEC_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    let ja = fs::read(dir.path().join("a/sweep.json")).unwrap();
    let jb = fs::read(dir.path().join("b/sweep.json")).unwrap();
    assert_eq!(ja, jb);
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["sweep"]["norms"].as_array().unwrap().len(), 20);
    assert!(v["meta"]["potential_sha256"].is_null());
}

#[test]
fn malformed_potential_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "bad.json", r#"{"jumps":["#);
    let o = quasispec(&["--potential", &pot, "--command", "solve"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"]["code"], "parse");

    let pot = write(dir.path(), "outside.json", r#"{"jumps":[{"at":4.0,"height":1}]}"#);
    let o = quasispec(&["--potential", &pot, "--command", "solve"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = quasispec(&["--command", "solve"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = quasispec(&["--command", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"]["code"], "usage");
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "huge.json", r#"{"trig":{"cos":[0,1e6]}}"#);
    let o = quasispec(&["--potential", &pot, "--command", "solve", "--n", "2", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout_json(&o)["error"]["class"], "numerical");
}

#[test]
fn resolvent_near_the_spectrum_exits_with_4() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "delta.json", r#"{"jumps":[{"at":1.5707963267948966,"height":3}]}"#);
    let o = quasispec(&["--potential", &pot, "--command", "resolvent", "--lambda", "2.25", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stdout_json(&o)["error"]["code"], "ill_conditioned_resolvent");
}

#[test]
fn resolvent_and_projector_experiments_write_tables() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "delta.json", r#"{"jumps":[{"at":1.5707963267948966,"height":3}]}"#);
    let o = quasispec(
        &["--potential", &pot, "--command", "resolvent", "--lambda=-5,0", "--halvings", "2", "--out", "r"],
        dir.path(),
    );
    assert!(o.status.success());
    let d: Vec<f64> = csv_rows(&dir.path().join("r/resolvent.csv")).iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(d.len(), 3);
    assert!(d[2] < d[0]);

    let o = quasispec(
        &["--potential", &pot, "--command", "projector", "--n", "4", "--halvings", "2", "--out", "p"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let rows = csv_rows(&dir.path().join("p/continuity.csv"));
    assert_eq!(rows.len(), 3);
    let norms: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]));
}
