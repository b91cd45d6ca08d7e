use std::path::Path;
use std::process::{Command, Output};

use tiltlab_cli::{catalog_list, emit_report, run_scenario, Outcome, Scenario};

fn tiltlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiltlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

const SCENARIO: &str = r#"
[function]
id = "quad"
box = [-2.0, 2.0]
points = 401
base = [0.0]

[modulus]
phi = "power:2"

[run]
checks = ["verify:T4.5", "check:slwp", "check:metric-reg", "search:tslm", "tiltmap"]
sweep = "tau=-4:4;kappa=-4:4;r=0.5,1;delta=0.5,1;gamma=1"

[constants]
r = 1.0
delta = 1.0
tau = 1.0
kappa = 1.0
"#;

#[test]
fn verify_quad_is_consistent() {
    let o = tiltlab(&["verify", "T4.5", "quad", "--phi", "power:2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("CONSISTENT"));
    assert!(!stdout(&o).contains("INCONSISTENT"));
}

#[test]
fn unknown_function_exits_2_and_names_it() {
    let o = tiltlab(&["verify", "T4.5", "nope", "--phi", "power:2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
    let o = tiltlab(&["verify", "T9.9", "quad", "--phi", "power:2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("T9.9"));
}

#[test]
fn quartic_fails_quadratic_growth_but_exits_0() {
    let o = tiltlab(&["check", "slwp", "quartic", "--phi", "power:2"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.contains(" fail "), "{line}");
}

#[test]
fn catalog_lists_registry() {
    let o = tiltlab(&["catalog"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for id in ["quad", "power:2", "verify:T4.5", "check:swlwp"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id}");
    }
    assert_eq!(text.lines().count(), catalog_list().len());
}

#[test]
fn run_reports_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("s.toml");
    std::fs::write(&cfg, SCENARIO).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = tiltlab(&["run", cfg.to_str().unwrap(), "--out-dir", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = tiltlab(&["run", cfg.to_str().unwrap(), "--out-dir", b.to_str().unwrap(), "--parallel"]);
    assert_eq!(o.status.code(), Some(0));
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    assert_eq!(fa.len(), 6);
    assert_eq!(fa, fb);
    let summary = String::from_utf8(fa.iter().find(|(n, _)| n == "summary.csv").unwrap().1.clone()).unwrap();
    assert!(summary.starts_with("check,kind,verdict,margin,constants\n"));
    assert!(summary.contains("verify:T4.5,theorem,CONSISTENT"));
    assert!(summary.contains("check:slwp,slwp,pass,"));
}

#[test]
fn empty_scenario_gives_header_only_csv() {
    let s = Scenario::from_toml("[function]\nid = \"quad\"\n[run]\nchecks = []\n").unwrap();
    let entries = run_scenario(&s);
    assert!(entries.is_empty());
    let tmp = tempfile::tempdir().unwrap();
    emit_report(&entries, tmp.path()).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert_eq!(text, "check,kind,verdict,margin,constants\n");
}

#[test]
fn tiltmap_of_quad_halves_the_tilt() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tm.csv");
    let o = tiltlab(&["tiltmap", "quad", "--r", "1", "--delta", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        // Grid spacing is 0.01, so the selected node is within half a cell.
        assert!((cols[1] - cols[0] / 2.0).abs() <= 0.005 + 1e-12, "{line}");
        rows += 1;
    }
    assert!(rows > 20);
}

#[test]
fn job_errors_are_reported_and_exit_2() {
    // Metric checks need a graph, which double-well does not have.
    let s = Scenario::from_toml(
        "[function]\nid = \"double-well\"\nbase = [1.0]\n[modulus]\nphi = \"power:2\"\n[run]\nchecks = [\"check:metric-reg\", \"check:slwp\"]\n",
    )
    .unwrap();
    let entries = run_scenario(&s);
    assert!(matches!(entries[0].outcome, Outcome::Error(_)));
    assert!(matches!(entries[1].outcome, Outcome::Certificate(_)));
    assert_eq!(tiltlab_cli::exit_status(&entries), 2);
}

#[test]
fn bad_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[function]\nid = \"quad\"\n[run]\nchecks = [\"check:nothing\"]\n").unwrap();
    let o = tiltlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        Scenario::load(&e.unwrap().path()).unwrap();
        n += 1;
    }
    assert!(n >= 2);
}

#[test]
fn conjugate_and_envelope_accept_negative_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c.csv");
    let o = tiltlab(&["conjugate", "quad:0.5", "-2:2", "401", "--dual", "-1:1", "--dual-points", "201", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let g = tiltlab::GridFunction::from_csv(&std::fs::read_to_string(&out).unwrap(), "c").unwrap();
    for i in 0..g.len() {
        let u = g.coord(i)[0];
        assert!((g.value(i) - u * u / 2.0).abs() <= 1e-12);
    }
    let o = tiltlab(&["envelope", "double-well", "-2:2", "401", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = tiltlab(&["check", "slwp", "quad", "--box", "-1:1", "--points", "201", "--phi", "power:2", "--base", "0", "--r", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(" pass "));
}
