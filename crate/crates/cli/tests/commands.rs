use std::path::PathBuf;
use std::process::{Command, Output};

fn maci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maci")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn check_accepted_plan() {
    let out = maci(&["check", "--scenario", "builtin:augmented", "--schedule", &fixture("deepseek_sequential.csv")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 hard violations"), "{}", stdout(&out));
}

#[test]
fn check_flawed_plan_exits_one() {
    let out = maci(&["check", "--scenario", "builtin:baseline", "--schedule", &fixture("deepseek_table2.csv")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("3 hard violations"));
}

#[test]
fn tsp_prints_the_optimum() {
    let out = maci(&["tsp", "--matrix", &fixture("n5.txt"), "--algo", "brute"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("length") && l.ends_with(" 24")), "{text}");
    assert!(text.contains("evaluations"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(maci(&["plan", "--scenario", "/no/such/scenario.json"]).status.code(), Some(2));
    assert_eq!(maci(&["check", "--schedule", "/no/such.csv"]).status.code(), Some(2));
    assert_eq!(maci(&["tsp", "--matrix", &fixture("n5.txt"), "--algo", "magic"]).status.code(), Some(2));
    assert_eq!(maci(&["plan", "--packs", "garden"]).status.code(), Some(2));
    assert_eq!(maci(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn machine_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let p = path.to_string_lossy();
        assert_eq!(maci(&["tsp", "--matrix", &fixture("n10.txt"), "--algo", "ga", "--seed", "9", "--out", &p]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let p = dir.path().join("plan.json");
    let out = maci(&["plan", "--scenario", "builtin:delayed-augmented", "--out", &p.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let plan: serde_json::Value = serde_json::from_slice(&std::fs::read(&p).unwrap()).unwrap();
    assert_eq!(plan["report"]["violations"].as_array().unwrap().iter().filter(|v| v["hard"] == true).count(), 0);
}

#[test]
fn disrupt_replans_late_flight() {
    let out = maci(&["disrupt", "--scenario", "builtin:augmented", "--events", &fixture("delay_event.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("replan 10:00..18:00"), "{text}");
    assert!(text.contains("0 hard violations"));
}
