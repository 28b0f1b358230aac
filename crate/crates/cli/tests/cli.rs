use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BALANCING: &str = "[lambda]\natoms = [[0.5, 0.25]]\n[sigma]\ncoefficients = [1.0, -2.0]\n";
const THETA2: &str = "[lambda]\natoms = [[0.5, 1.0]]\n[mu]\natoms = [[0.3, 0.2], [-0.3, 0.2]]\n[sigma]\ncoefficients = [1.0, -2.0]\n";

fn lwf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lwf")).args(args).output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_balancing_config() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "bal.toml", BALANCING);
    let out = d.path().join("out");
    let o = lwf(&["--config", s(&cfg), "--out", s(&out), "classify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Theta3") && text.contains("coexistence"), "{text}");
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("classify.json")).unwrap()).unwrap();
    let want = 1.0 - 2f64.ln();
    assert!((json["c0"].as_f64().unwrap() - want).abs() < 1e-10);
    assert!((json["c1"].as_f64().unwrap() - want).abs() < 1e-10);
    assert_eq!(json["regime"], "Theta3");
    assert!(out.join("manifest.json").exists());
}

#[test]
fn classify_neutral_config() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "n.toml", "[lambda]\natoms = [[0.5, 1.0]]\n");
    let o = lwf(&["--config", s(&cfg), "--out", s(&d.path().join("o")), "classify"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("Theta2"));
}

#[test]
fn malformed_atom_is_a_validation_error() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "bad.toml", "[lambda]\natoms = [[1.5, 1.0]]\n");
    let o = lwf(&["--config", s(&cfg), "--out", s(&d.path().join("o")), "classify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("lambda.atoms[0]"), "{}", stderr(&o));
}

#[test]
fn syntax_error_reports_line() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "bad.toml", "[lambda]\natoms = [[0.5, ]\n");
    let o = lwf(&["--config", s(&cfg), "--out", s(&d.path().join("o")), "classify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn divergent_impact_names_the_integral() {
    let d = TempDir::new().unwrap();
    // Beta(1, 1): r^-2 Lambda(dr) has a non-integrable log(1/(1-r)) r^-2 near 0
    let cfg = write_config(&d, "div.toml", "[lambda]\ndensity = { kind = \"beta\", a = 1.0, b = 1.0, mass = 1.0 }\n");
    let o = lwf(&["--config", s(&cfg), "--out", s(&d.path().join("o")), "classify"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("coalescence impact"), "{}", stderr(&o));
}

#[test]
fn zero_reps_is_rejected() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "t2.toml", THETA2);
    let o = lwf(&["--config", s(&cfg), "--out", s(&d.path().join("o")), "--reps", "0", "check-duality"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("reps"));
}

#[test]
fn missing_config_is_reported() {
    let d = TempDir::new().unwrap();
    let o = lwf(&["--out", s(&d.path().join("o")), "classify"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_csv_for_any_worker_count() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "t2.toml", THETA2);
    let run = |name: &str, seed: &str, workers: &str| {
        let out = d.path().join(name);
        let o = lwf(&[
            "--config", s(&cfg), "--out", s(&out), "--seed", seed, "--reps", "8", "--workers", workers, "--horizon", "3",
            "simulate-x", "--record-events",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        (std::fs::read(out.join("simulate_x.csv")).unwrap(), std::fs::read(out.join("simulate_x_events.csv")).unwrap())
    };
    let a = run("a", "5", "1");
    let b = run("b", "5", "4");
    let c = run("c", "6", "2");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);
    let header = String::from_utf8(a.0.clone()).unwrap();
    assert!(header.starts_with("rep,time,state\n"));
    assert!(String::from_utf8(a.1).unwrap().starts_with("rep,time,kind,r,u\n"));
}

#[test]
fn fixation_both_columns_and_replay() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "t2.toml", THETA2);
    let out = d.path().join("fix");
    let o = lwf(&["--config", s(&cfg), "--out", s(&out), "--reps", "500", "fixation", "--method", "both", "--t-final", "30"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(7), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("fixation.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "x,h_renewal,se,h_direct,se,|z|");
    assert_eq!(csv.lines().count(), 4);
    let again = d.path().join("again");
    let r = lwf(&["--out", s(&again), "--workers", "3", "replay", s(&out.join("manifest.json"))]);
    assert!(r.status.success(), "{}{}", stdout(&r), stderr(&r));
    assert_eq!(csv, std::fs::read_to_string(again.join("fixation.csv")).unwrap());
}

#[test]
fn wrong_regime_is_a_validation_error() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "bal.toml", BALANCING);
    let o = lwf(&["--config", s(&cfg), "--out", s(&d.path().join("o")), "--reps", "10", "fixation", "--method", "renewal"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("Theta2"));
}

#[test]
fn sandwich_command_passes() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, "t2.toml", THETA2);
    let out = d.path().join("sw");
    let o = lwf(&["--config", s(&cfg), "--out", s(&out), "--reps", "200", "sandwich-test"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("sandwich.json")).unwrap()).unwrap();
    assert_eq!(json["violations"], 0);
    assert_eq!(json["manifest"], "manifest.json");
}
