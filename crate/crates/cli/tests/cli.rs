use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fairspread(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairspread"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const MODEL: &str = r#"
[model]
n = 300
pi = [0.5, 0.5]
p = [0.1, 0.005, 0.005, 0.1]
labels = "fixed"
"#;

#[test]
fn generate_detect_simulate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("model.toml"), MODEL).unwrap();

    let gen = stdout(&fairspread(
        &[
            "generate",
            "--config",
            "model.toml",
            "--seed",
            "1",
            "--out",
            "net",
        ],
        d,
    ));
    assert!(gen.starts_with("300 nodes"));
    assert!(d.join("net/edges.txt").exists());
    let labels = fs::read_to_string(d.join("net/labels.csv")).unwrap();
    assert_eq!(labels.lines().next(), Some("node,label"));

    let det = stdout(&fairspread(
        &[
            "detect",
            "--edges",
            "net/edges.txt",
            "--labels",
            "net/labels.csv",
            "--k",
            "2",
            "--lcc",
            "--out",
            "det",
        ],
        d,
    ));
    let agreement: f64 = det
        .lines()
        .find_map(|l| l.strip_prefix("agreement with given labels: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(agreement > 0.95);
    assert!(d.join("det/labels.csv").exists());

    let sim = stdout(&fairspread(
        &[
            "simulate",
            "--edges",
            "net/edges.txt",
            "--labels",
            "net/labels.csv",
            "--allocation",
            "3,2",
            "--beta-within",
            "0.3",
            "--beta-between",
            "0.1",
            "--t",
            "2",
            "--runs",
            "4",
            "--out",
            "sim",
        ],
        d,
    ));
    assert!(sim.starts_with("mean entropy"));
    let coverage = fs::read_to_string(d.join("sim/coverage.csv")).unwrap();
    assert_eq!(
        coverage.lines().next(),
        Some("run,q_1,q_2,entropy,coverage")
    );
    assert_eq!(coverage.lines().count(), 5);
    let trace = fs::read_to_string(d.join("sim/trace.csv")).unwrap();
    let seeds = trace.lines().filter(|l| l.ends_with(",0")).count();
    assert_eq!(seeds, 5);

    // the same seed gives the same network
    let again = fairspread(
        &[
            "generate",
            "--config",
            "model.toml",
            "--seed",
            "1",
            "--out",
            "net2",
        ],
        d,
    );
    stdout(&again);
    assert_eq!(
        fs::read(d.join("net/edges.txt")).unwrap(),
        fs::read(d.join("net2/edges.txt")).unwrap()
    );
}

#[test]
fn allocate_prints_the_reference_sbm1_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&fairspread(
        &["allocate", "--recipe", "sbm1", "--strategy", "proposed"],
        dir.path(),
    ));
    assert!(out.contains("proposed,\"4,8,18\""), "{out}");
}

#[test]
fn experiment_writes_outputs_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = stdout(&fairspread(
        &[
            "experiment",
            "--recipe",
            "sbm2",
            "--replications",
            "3",
            "--lambda",
            "1,3",
            "--strategy",
            "proposed,equal",
            "--out",
            "res",
        ],
        d,
    ));
    assert!(out.contains("12 rows"));
    let results = fs::read_to_string(d.join("res/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 13);
    let summary = fs::read_to_string(d.join("res/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    let echo = fs::read_to_string(d.join("res/config.echo")).unwrap();
    assert!(echo.contains("replications = 3"));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = fairspread(
        &["detect", "--edges", "nope.txt", "--k", "2", "--out", "x"],
        d,
    );
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let unknown = fairspread(&["experiment", "--recipe", "no-such-recipe"], d);
    assert!(!unknown.status.success());
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("sbm1"));

    fs::write(d.join("bad.edges"), "1 2\n3\n").unwrap();
    let bad = fairspread(
        &["detect", "--edges", "bad.edges", "--k", "2", "--out", "x"],
        d,
    );
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bad.edges:2:"));

    let budget = fairspread(&["allocate", "--recipe", "sbm1", "--budget", "5000"], d);
    assert!(!budget.status.success());
}
