use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gps-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn gps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gps")).args(args).output().unwrap()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = gps(args);
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cusp_is_certified() {
    let f = scratch("cusp.gps", "vars x:1 y:1\n# the cusp\ny1^2 - x1^3;\n");
    let (code, out, _) = run(&["monomialize", path(&f)]);
    assert_eq!(code, 0);
    assert!(out.starts_with("9 leaves, height 2, certified: true"));
    assert!(!out.contains("NOT certified"));
}

#[test]
fn long_division_example() {
    let f = scratch("f.gps", "vars x:1 y:1\ny1^2;\n");
    let g = scratch("g.gps", "vars x:1 y:1\ny1 - x1;\n");
    let (code, out, _) = run(&["divide", path(&f), path(&g), "y1"]);
    assert_eq!(code, 0);
    assert!(out.contains("Q = x1 + y1\n"));
    assert!(out.contains("B_0 = x1^2\n"));
    assert!(out.contains("residual is zero"));
}

#[test]
fn division_by_non_regular_series_exits_2() {
    let f = scratch("f2.gps", "vars x:1 y:1\ny1^2;\n");
    let g = scratch("x.gps", "vars x:1 y:1\nx1*y1;\n");
    let (code, _, err) = run(&["divide", path(&f), path(&g), "y1"]);
    assert_eq!(code, 2);
    assert!(err.contains("not regular in y1"));
}

#[test]
fn parse_and_config_errors_exit_1() {
    let bad = scratch("bad.gps", "vars x:1 y:1\ny1^2 + ;\n");
    let (code, _, err) = run(&["monomialize", path(&bad)]);
    assert_eq!(code, 1);
    assert!(err.contains("parse error at 2:8"), "{err}");
    let zero = scratch("zero.gps", "vars x:1 y:1\nx1 - x1;\n");
    let (code, _, err) = run(&["monomialize", path(&zero)]);
    assert_eq!(code, 1);
    assert!(err.contains("nonzero series required"));
    let cfg = scratch("bad.cfg", "precision = 8\nlambda = 0\n");
    let f = scratch("cusp2.gps", "vars x:1 y:1\ny1^2 - x1^3;\n");
    let (code, _, err) = run(&["--config", path(&cfg), "monomialize", path(&f)]);
    assert_eq!(code, 1);
    assert!(err.contains("2:1"), "{err}");
}

#[test]
fn small_precision_names_the_series() {
    let f = scratch("two.gps", "vars x:1 y:1\nx1 + y1;\ny1^2 - x1^3;\n");
    let (code, _, err) = run(&["monomialize", path(&f), "--precision", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("series 2 (y1^2 - x1^3)"), "{err}");
}

#[test]
fn caps_exit_3() {
    let f = scratch("cusp3.gps", "vars x:1 y:1\ny1^2 - x1^3;\n");
    let (code, _, err) = run(&["monomialize", path(&f), "--max-depth", "1"]);
    assert_eq!(code, 3);
    assert!(err.contains("cap exceeded"));
}

#[test]
fn flags_override_config_file() {
    let cfg = scratch("tiny.cfg", "precision = 2\n");
    let f = scratch("cusp4.gps", "vars x:1 y:1\ny1^2 - x1^3;\n");
    assert_eq!(run(&["--config", path(&cfg), "monomialize", path(&f)]).0, 2);
    assert_eq!(run(&["--config", path(&cfg), "monomialize", path(&f), "--precision", "8"]).0, 0);
}

#[test]
fn json_report_is_thread_independent() {
    let f = scratch("pair.gps", "vars x:1 y:1\ny1^2 - x1^2;\nx1;\n");
    let mut reports = Vec::new();
    for t in ["1", "3"] {
        let out = scratch(&format!("report{t}.json"), "");
        assert_eq!(run(&["monomialize", path(&f), "--threads", t, "--json", path(&out)]).0, 0);
        reports.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let v: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(v["certified"], true);
}

#[test]
fn half_diagonal_parametrization() {
    let f = scratch("diag.set", "vars x:1 y:1\ny1^2 - x1^2 = 0 & x1 > 0 & y1 > 0;\n");
    let (code, out, _) = run(&["parametrize", path(&f), "--covering-samples", "2000"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("1 quadrants"), "{out}");
    assert!(out.contains("0 false"));
    assert!(out.contains("covered: 1.0000"));
}
