use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const LINE: &str = r#"
name = "line"

[system]
dynamics = "linear"
a = [[0.0]]
b = [[1.0]]
tau = 1.0
w_normal = [0.1]
d = 0.5

[grid]
lo = [0.0]
hi = [6.0]
eta = [1.0]
inputs = [[0.0], [1.25], [-1.25]]

[spec]
default_color = 1
regions = [{ name = "goal", color = 2, boxes = [{ lo = [3.0], hi = [6.0] }] }]

[run]
horizon = 12
x0 = [0.5]
"#;

fn rescot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rescot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Abstracts and classifies `config` in `dir`; returns the config path.
fn pipeline(dir: &Path, config: &str, extra: &[&str]) -> PathBuf {
    let cfg = dir.join("line.toml");
    fs::write(&cfg, config).unwrap();
    let mut args = vec!["abstract", "--config", p(&cfg), "--out"];
    let dump = dir.join("abstraction.json");
    args.push(p(&dump));
    args.extend_from_slice(extra);
    let o = rescot(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = rescot(&["classify", "--abstraction", p(&dump), "--out", p(dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
    cfg
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, LINE.replace("tau = 1.0", "tau = = 1.0")).unwrap();
    let o = rescot(&["abstract", "--config", p(&cfg), "--out", p(&dir.path().join("a.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));

    fs::write(&cfg, LINE.replace("lo = [3.0]", "lo = [2.5]")).unwrap();
    let o = rescot(&["abstract", "--config", p(&cfg), "--out", p(&dir.path().join("a.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("straddles"), "{}", stderr(&o));
}

#[test]
fn abstract_reports_edge_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("line.toml");
    fs::write(&cfg, LINE).unwrap();
    let dump = dir.path().join("a.json");
    let o = rescot(&["abstract", "--config", p(&cfg), "--out", p(&dump)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("states = 7"), "{}", stdout(&o));
    assert!(!stdout(&o).contains("dist_edges = 0"));

    let o = rescot(&["abstract", "--config", p(&cfg), "--d", "0.1", "--out", p(&dump)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("dist_edges = 0"), "{}", stdout(&o));
}

#[test]
fn classify_g1_and_compare_modes() {
    let dir = TempDir::new().unwrap();
    let o = rescot(&["classify", "--abstraction", &data("g1.json"), "--compare-modes", "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let map = fs::read_to_string(dir.path().join("resilience.csv")).unwrap();
    assert_eq!(map, "state_id,value\n0,1\n1,1\n2,0\n");
    let hist = fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(hist, "value,count\n0,1\n1,2\n");
    let div = fs::read_to_string(dir.path().join("mode_divergence.csv")).unwrap();
    assert_eq!(div, "state_id,reference,paper_literal\n0,1,0\n1,1,0\n");
}

#[test]
fn spike_free_abstraction_has_only_zero_and_top() {
    let dir = TempDir::new().unwrap();
    let o = rescot(&["classify", "--abstraction", &data("no_spikes.json"), "--out", p(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "value,count\n0,1\nomega+1,2\n");
}

#[test]
fn classify_rejects_other_versions() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(data("g1.json")).unwrap().replace("\"version\":1", "\"version\":7");
    let dump = dir.path().join("g.json");
    fs::write(&dump, text).unwrap();
    let o = rescot(&["classify", "--abstraction", p(&dump), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = rescot(&["classify", "--abstraction", p(&dir.path().join("missing.json")), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_reports_per_probe() {
    let dir = TempDir::new().unwrap();
    let o = rescot(&["classify", "--abstraction", &data("g1.json"), "--out", p(dir.path())]);
    assert!(o.status.success());
    let ctrl = dir.path().join("controller.json");
    let check = |k: &str| {
        let o = rescot(&[
            "verify", "--abstraction", &data("g1.json"), "--controller", p(&ctrl),
            "--probe", "0", "--probe", "2", "--k", k,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    assert_eq!(check("1"), "cell_id,k,result\n0,1,pass\n2,1,fail\n");
    assert_eq!(check("2"), "cell_id,k,result\n0,2,fail\n2,2,fail\n");

    let o = rescot(&[
        "verify", "--abstraction", &data("g1.json"), "--controller", p(&ctrl), "--probe", "9", "--k", "1",
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn simulate_traces_and_domain_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = pipeline(dir.path(), LINE, &[]);
    let base = |extra: &[&str]| {
        let mut args = vec![
            "simulate".to_string(), "--config".into(), p(&cfg).into(),
            "--abstraction".into(), p(&dir.path().join("abstraction.json")).into(),
            "--controller".into(), p(&dir.path().join("controller.json")).into(),
            "--out".into(), p(&dir.path().join("trace.csv")).into(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        rescot(&args)
    };

    let o = base(&[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("steps = 12") && stdout(&o).contains("verdict = satisfied"), "{}", stdout(&o));

    let o = base(&["--horizon", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace, "step,x0,u0,w0,cell_id,spike,verdict\n");

    let o = base(&["--x0", "-4.0"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = base(&["--spike", "2:0.05"]);
    assert_eq!(o.status.code(), Some(2), "spikes inside the nominal box are rejected");
}

#[test]
fn unknown_scenario_is_a_reference_error() {
    let dir = TempDir::new().unwrap();
    let o = rescot(&["scenario", "no_such_scenario", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(4));
    let o = rescot(&["scenario", "--list"]);
    assert_eq!(
        stdout(&o),
        "reach_avoid_two_passages\ntwo_targets_buchi_cobuchi\ntwo_targets_obstacles\n"
    );
}

#[test]
fn scenario_from_config_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("line.toml");
    fs::write(&cfg, LINE).unwrap();
    let out = dir.path().join("run");
    let o = rescot(&["--jobs", "1", "scenario", "--config", p(&cfg), "--seed", "3", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["abstraction.json", "resilience.csv", "controller.json", "histogram.csv", "trace.csv", "summary.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(stdout(&o).contains("trace.verdict = satisfied"), "{}", stdout(&o));
}
