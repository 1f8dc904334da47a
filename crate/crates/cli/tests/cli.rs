use std::process::{Command, Output};

use serde_json::Value;

fn su21(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_su21")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

#[test]
fn intertwine_three_paths_at_spot() {
    let out = su21(&["intertwine", "--j", "0", "--m1", "0", "--delta", "0", "--lambda", "2", "--path", "all"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let want = std::f64::consts::PI.powi(2) / 8.0;
    for p in ["closed", "gammasum", "quadrature"] {
        let x = v["paths"][p]["value"]["re"].as_f64().unwrap();
        assert!((x - want).abs() < 1e-8, "{p}: {x}");
    }
    assert_eq!(v["agreement"]["pass"], Value::Bool(true));
    assert_eq!(v["order"]["exact"], 0);
}

#[test]
fn intertwine_complex_lambda() {
    let out = su21(&["intertwine", "--j", "1", "--m1", "-1", "--delta", "1", "--lambda", "2.5+0.5i", "--path", "gammasum"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["paths"]["gammasum"]["diff"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["order"]["exact"], Value::Null);
}

#[test]
fn intertwine_numeric_failure_is_exit_one() {
    let out = su21(&["intertwine", "--j", "1", "--m1", "1", "--delta", "0", "--lambda", "-0.5", "--path", "quadrature"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["agreement"]["failures"]["quadrature"].is_string());
}

#[test]
fn bad_flags_are_exit_two() {
    assert_eq!(su21(&["classify", "--delta", "x"]).status.code(), Some(2));
    assert_eq!(su21(&["nonsense"]).status.code(), Some(2));
    assert_eq!(su21(&["intertwine", "--j", "1", "--m1", "1", "--delta", "0", "--lambda", "2", "--tol", "0.5"]).status.code(), Some(2));
    let out = su21(&["cg", "--j1", "1/2", "--m1", "1", "--j2", "1/2", "--m2", "1/2", "--j", "1", "--m", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_first_chamber_listing() {
    let out = su21(&["classify", "--delta", "0", "--lambda", "4", "--diagram", "txt"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.starts_with("chamber I1"));
    assert!(s.contains("V_fin (shade 0): (0, 0) (1, -1) (1, 1) (2, 0)\n"));
    assert!(s.contains("# V_fin"));
    let v = json(&su21(&["classify", "--delta", "0", "--lambda", "4", "--kmax", "6"]));
    assert_eq!(v["chamber"], "I1");
    assert_eq!(v["lowest"]["V_H"]["k"], 4);
    assert_eq!(v["regions"]["V_fin"]["shade"], 0);
}

#[test]
fn second_chamber_split_along_sum() {
    let v = json(&su21(&["classify", "--delta", "6", "--lambda", "2", "--kmax", "8"]));
    assert_eq!(v["chamber"], "II1");
    let walls = v["walls"].as_array().unwrap();
    assert!(walls.iter().all(|w| w["line"] == "k+l"));
    for (name, region) in v["regions"].as_object().unwrap() {
        let sums: Vec<i64> = region["points"].as_array().unwrap().iter().map(|p| p[0].as_i64().unwrap() + p[1].as_i64().unwrap()).collect();
        let (lo, hi) = (sums.iter().min().unwrap(), sums.iter().max().unwrap());
        match name.as_str() {
            "V_disc-" => assert!(*hi < 4),
            "Q-" => assert!(*lo >= 4 && *hi < 8),
            "V_H" => assert!(*lo >= 8),
            other => panic!("unexpected region {other}"),
        }
    }
}

#[test]
fn unclassified_diagram_is_bare_lattice() {
    let out = su21(&["diagram", "--delta", "0", "--lambda", "1", "--kmax", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.starts_with("warning: unclassified"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning"));
    let svg = su21(&["diagram", "--delta", "0", "--lambda", "4", "--format", "svg"]);
    let s = String::from_utf8(svg.stdout).unwrap();
    assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
}

#[test]
fn output_is_deterministic() {
    let args = ["action-matrix", "--delta", "1", "--jmax", "1", "--op", "v(a2)", "--lambda", "3"];
    let a = su21(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_su21")).args(args).env("SU21_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["jmax_x2"], 2);
    let rows = v["rows"].as_object().unwrap();
    assert!(rows.keys().all(|k| k.split(',').count() == 4));
}

#[test]
fn action_matrix_csv_and_formal() {
    let out = su21(&["action-matrix", "--delta", "0", "--jmax", "1", "--op", "omega2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.starts_with("source,target,exact,re,im\n"));
    assert!(s.lines().count() > 1);
}

#[test]
fn compact_commands() {
    let v = json(&su21(&["cg", "--j1", "1/2", "--m1", "1/2", "--j2", "1/2", "--m2", "-1/2", "--j", "1", "--m", "0"]));
    assert_eq!(v["value"]["exact"], "1/2*sqrt(2)");
    assert_eq!(v["index"]["j_x2"], 2);
    let v = json(&su21(&["threej", "--j1", "1", "--j2", "1", "--j3", "0", "--m1", "0", "--m2", "0", "--m3", "0"]));
    assert!((v["value"]["float"].as_f64().unwrap().abs() - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    let v = json(&su21(&["dfun", "--j", "1/2", "--m1", "1/2", "--m2", "1/2", "--theta", "0"]));
    assert!(v["value"]["exact"].is_string());
    let v = json(&su21(&["wigner-eval", "--j", "0", "--n", "1", "--m1", "0", "--m2", "0", "--zeta", "0.5"]));
    assert!(v["value"]["float"]["re"].is_number());
}

#[test]
fn structure_and_verify_all() {
    let out = su21(&["structure", "verify"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("identities hold"));
    let out = su21(&["verify-all", "--kmax", "8"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], Value::Bool(true));
}
