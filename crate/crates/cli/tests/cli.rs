use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PHI: &str = "# R=1 d=2 T=1 n_t=0 n_r=8 kind=adjoint\n1,1,0.8,0.5,0.3,0.1,0,0\n";
const SOURCE: &str = "# R=1 d=2 T=1 n_t=2 n_r=4 kind=control\n0,1,0.5,0\n0,1,0.5,0\n1,0,0.2,0.3\n";

fn lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_talenti-lab"))
        .args(args)
        .current_dir(dir)
        .env("TALENTI_LAB_THREADS", "2")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("phi.csv"), PHI).unwrap();
    fs::write(dir.path().join("f.csv"), SOURCE).unwrap();
    dir
}

#[test]
fn help_exits_zero() {
    let dir = workdir();
    let o = lab(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("experiment"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = workdir();
    assert_eq!(code(&lab(&["solve", "--bogus"], dir.path())), 2);
}

#[test]
fn compare_is_reflexive() {
    let dir = workdir();
    let o = lab(&["compare", "phi.csv", "phi.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let v = json(&o.stdout);
    assert_eq!(v["verdict"], Value::Bool(true));
    assert_eq!(v["margin"].as_f64(), Some(0.0));
}

#[test]
fn compare_detects_strict_domination() {
    let dir = workdir();
    fs::write(dir.path().join("small.csv"), "# R=1 d=2 T=1 n_t=0 n_r=8 kind=adjoint\n0.5,0.5,0.4,0.25,0.15,0.05,0,0\n").unwrap();
    let up = json(&lab(&["compare", "small.csv", "phi.csv"], dir.path()).stdout);
    let down = json(&lab(&["compare", "phi.csv", "small.csv"], dir.path()).stdout);
    assert_eq!(up["verdict"], Value::Bool(true));
    assert_eq!(down["verdict"], Value::Bool(false));
    assert!(down["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn rearranged_source_dominates_and_solve_writes_state() {
    let dir = workdir();
    assert_eq!(code(&lab(&["rearrange", "f.csv", "fs.csv"], dir.path())), 0);
    let text = fs::read_to_string(dir.path().join("fs.csv")).unwrap();
    assert!(text.starts_with("# R=1 d=2 T=1 n_t=2 n_r=4 kind=control"));
    let v = json(&lab(&["compare", "f.csv", "fs.csv"], dir.path()).stdout);
    assert_eq!(v["verdict"], Value::Bool(true));

    assert_eq!(code(&lab(&["solve", "--source", "f.csv", "--out", "u.csv"], dir.path())), 0);
    let u = fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert!(u.starts_with("# R=1 d=2 T=1 n_t=2 n_r=4 kind=state"));
    assert_eq!(u.lines().nth(1), Some("0,0,0,0"));
}

#[test]
fn adjoint_and_optimize() {
    let dir = workdir();
    assert_eq!(code(&lab(&["adjoint", "--terminal", "phi.csv", "--out", "p.csv", "--nt", "4"], dir.path())), 0);
    let p = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(p.lines().count(), 6);
    assert_eq!(p.lines().last(), Some("1,1,0.8,0.5,0.3,0.1,0,0"));

    let args = ["optimize", "--terminal", "phi.csv", "--volume", "0.3", "--out", "fo.csv", "--report", "rep.json", "--nt", "4"];
    assert_eq!(code(&lab(&args, dir.path())), 0);
    let rep = json(&fs::read(dir.path().join("rep.json")).unwrap());
    for key in ["c", "objective", "radius_curve", "feasibility_residual"] {
        assert!(rep.get(key).is_some(), "missing {key}");
    }
    let c = rep["c"].as_f64().unwrap();
    assert!(c > 0.0 && c < 1.0);
    assert_eq!(rep["radius_curve"].as_array().unwrap().len(), 4);
    assert!(rep["feasibility_residual"].as_f64().unwrap().abs() <= 1e-9 * std::f64::consts::PI);
}

#[test]
fn validation_errors_exit_two_and_write_nothing() {
    let dir = workdir();
    let o = lab(&["optimize", "--terminal", "phi.csv", "--volume", "1.5", "--out", "fo.csv"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("fo.csv").exists());
    assert_eq!(code(&lab(&["solve", "--source", "missing.csv", "--out", "u.csv"], dir.path())), 2);
    assert_eq!(code(&lab(&["solve", "--source", "f.csv", "--out", "no/such/dir/u.csv"], dir.path())), 2);
    fs::write(dir.path().join("bad.json"), r#"{"V0_fraction": 1.5}"#).unwrap();
    assert_eq!(code(&lab(&["experiment", "counterexample", "--config", "bad.json", "--out", "r.json"], dir.path())), 2);
    fs::write(dir.path().join("typo.json"), r#"{"n_rr": 64}"#).unwrap();
    assert_eq!(code(&lab(&["experiment", "counterexample", "--config", "typo.json", "--out", "r.json"], dir.path())), 2);
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn bad_thread_cap_is_rejected() {
    let dir = workdir();
    let o = Command::new(env!("CARGO_BIN_EXE_talenti-lab"))
        .args(["experiment", "talenti", "--samples", "1", "--nr", "16", "--nt", "16"])
        .current_dir(dir.path())
        .env("TALENTI_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn counterexample_defaults() {
    let dir = workdir();
    let o = lab(&["experiment", "counterexample", "--out", "r.json", "--profiles-dir", "prof"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&fs::read(dir.path().join("r.json")).unwrap());
    for key in ["c_phi", "c_psi", "control_distance", "cross_objectives"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert!(r["checks"].as_object().unwrap().values().all(|v| v == &Value::Bool(true)));
    let curves = fs::read_to_string(dir.path().join("prof/radius_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 257);
    assert!(dir.path().join("prof/terminal_profiles.csv").exists());
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = workdir();
    fs::write(dir.path().join("cfg.json"), r#"{"n_r": 64, "n_t": 64, "seed": 11}"#).unwrap();
    let run = |out: &str, threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_talenti-lab"))
            .args(["experiment", "talenti", "--config", "cfg.json", "--samples", "6", "--out", out])
            .current_dir(dir.path())
            .env("TALENTI_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.json", "1");
    assert_eq!(a, run("b.json", "1"));
    assert_eq!(a, run("c.json", "3"));

    let cx = |out: &str| {
        assert_eq!(code(&lab(&["experiment", "counterexample", "--config", "cfg.json", "--out", out], dir.path())), 0);
        fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(cx("x.json"), cx("y.json"));
}

#[test]
fn sweep_falsifies_every_candidate() {
    let dir = workdir();
    let o = lab(&["experiment", "sweep", "--nr", "128", "--nt", "128", "--random", "4"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o.stdout);
    let cands = v["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 3);
    assert!(cands.iter().all(|c| c["falsified"] == Value::Bool(true)));
}
