use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_l2torsion")).args(args).output().expect("binary runs")
}

fn structured(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "structured"]);
    let out = run(&all);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    assert_eq!(v["version"], 1);
    (out.status.code().unwrap(), v)
}

#[test]
fn circle_with_minus_one() {
    let (code, v) = structured(&["torsion", &data("circle.cc"), &data("rep_minus1.rep")]);
    assert_eq!(code, 0);
    assert_eq!(v["command"], "torsion");
    let r = &v["result"];
    assert!((r["coordinate"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(r["euler_characteristic"], 0);
    assert_eq!(r["convention"], "chain");
    // Reference data travels with the number.
    assert!(r["reference"]["module_gram"].as_str().is_some_and(|s| !s.is_empty()));
}

#[test]
fn det_routes_agree() {
    let value = |method: &str| {
        let (code, v) = structured(&["det", &data("mod.json"), &data("op.json"), "--method", method]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["method"], method);
        v["result"]["value"].as_f64().unwrap()
    };
    let spectral = value("spectral");
    for m in ["path", "polar"] {
        let x = value(m);
        assert!((x - spectral).abs() <= 1e-8 * spectral, "{m}: {x} vs {spectral}");
    }
}

#[test]
fn det_oracle_from_block_determinants() {
    // Commutant blocks: [[2, 1+i/2], [1/2−i, 3]] with weight 1/2, and the
    // scalar 3/2 + i/2 with weight 1/4. Det = Π |det T_k|^{w_k}.
    let d0 = (5.0f64.powi(2) + 0.75f64.powi(2)).sqrt(); // |6 − (1 + i/2)(1/2 − i)|
    let d1 = (1.5f64.powi(2) + 0.5f64.powi(2)).sqrt();
    let oracle = d0.powf(0.5) * d1.powf(0.25);
    let (_, v) = structured(&["det", &data("mod.json"), &data("op.json")]);
    let x = v["result"]["value"].as_f64().unwrap();
    assert!((x - oracle).abs() <= 1e-10 * oracle, "{x} vs {oracle}");
}

#[test]
fn non_unimodular_is_a_refusal() {
    let (code, v) = structured(&["torsion", &data("circle.cc"), &data("rep_times2.rep")]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "NotUnimodular");
    assert_eq!(v["error"]["refusal"], true);
    assert!(v["error"]["message"].as_str().unwrap().contains("Det = 2.0"));
    let text = run(&["torsion", &data("circle.cc"), &data("rep_times2.rep")]);
    assert_eq!(text.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&text.stderr).contains("NotUnimodular"));
}

#[test]
fn input_errors_exit_one() {
    let missing = run(&["torsion", "/definitely/not/here.cc"]);
    assert_eq!(missing.status.code(), Some(1));
    let dir = std::env::temp_dir().join(format!("l2t-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.cc");
    std::fs::write(&bad, r#"{"generators": ["t"], "cells": {"0": ["v"]}, "boundaries": {}, "colour": "red"}"#).unwrap();
    let (code, v) = structured(&["torsion", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "ParseError");
    assert!(v["error"]["message"].as_str().unwrap().contains("colour"));
    let (code, v) = structured(&["det", &data("mod.json"), &data("op.json"), "--kernel-tol", "-1"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "ValidationError");
    let (code, _) = structured(&["torsion", "fixture:circle", "fixture:minus1", "--convention", "sideways"]);
    assert_eq!(code, 1);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn structured_output_is_bitwise_reproducible() {
    for args in [
        vec!["torsion".to_string(), data("circle.cc"), data("rep_minus1.rep")],
        vec!["det".to_string(), data("t_minus_2.sym")],
        vec!["invariance".to_string(), "fixture:torus".into(), "fixture:regular3".into()],
        vec!["zeta".to_string(), data("two_term.json")],
    ] {
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        a.extend(["--format", "structured"]);
        let first = run(&a);
        let second = run(&a);
        assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
        assert_eq!(first.stdout, second.stdout);
    }
}

#[test]
fn cochain_convention_inverts_the_circle() {
    let (code, v) = structured(&["torsion", "fixture:circle", "fixture:minus1", "--convention", "cochain"]);
    assert_eq!(code, 0);
    assert!((v["result"]["coordinate"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["result"]["convention"], "cochain");
}

#[test]
fn betti_numbers_of_fixtures() {
    let b = |args: &[&str]| -> Vec<f64> {
        let (code, v) = structured(args);
        assert_eq!(code, 0);
        v["result"]["betti"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    let close = |x: Vec<f64>, y: &[f64]| x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-9) && x.len() == y.len();
    assert!(close(b(&["betti", "fixture:klein"]), &[1.0, 1.0, 0.0]));
    assert!(close(b(&["betti", "fixture:circle3", "fixture:regular3"]), &[1.0 / 3.0, 1.0 / 3.0]));
    // No representation on an abelian complex: the N(Z²) backend.
    assert!(close(b(&["betti", "fixture:torus", "--grid", "16"]), &[0.0, 0.0, 0.0]));
}

#[test]
fn abelian_documents() {
    let (code, v) = structured(&["det", &data("t_minus_2.sym")]);
    assert_eq!(code, 0);
    assert!((v["result"]["determinant"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let (code, v) = structured(&["torsion", &data("shift_complex.json")]);
    assert_eq!(code, 0);
    assert!((v["result"]["coordinate"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let (code, v) = structured(&["zeta", "fixture:circle"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["kind"], "BackendUnsupported");
}

#[test]
fn chain_complex_documents() {
    let (code, v) = structured(&["torsion", &data("two_term.json")]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert!((r["coordinate"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!(r["route_discrepancy"].as_f64().unwrap() < 1e-12);
    let (code, v) = structured(&["zeta", &data("two_term.json")]);
    assert_eq!(code, 0);
    assert!((v["result"]["factor"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    let (code, v) = structured(&["classcheck", &data("two_term.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["verdicts"][0]["convergence"]["verdict"], "pass");
}

#[test]
fn invariance_on_fixtures() {
    for (k, rho) in [("interval", "fixture:trivial"), ("circle", "fixture:minus1"), ("torus", "fixture:regular3")] {
        let (code, v) = structured(&["invariance", &format!("fixture:{k}"), rho]);
        assert_eq!(code, 0, "{k}");
        assert!(v["result"]["comparison"]["discrepancy"].as_f64().unwrap() < 1e-9, "{k}");
    }
    // A file complex needs an explicit subdivision.
    let (code, _) = structured(&["invariance", &data("circle.cc"), &data("rep_minus1.rep")]);
    assert_eq!(code, 1);
}

#[test]
fn fixture_suite_passes() {
    let out = run(&["--fixtures"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(text.contains("0 failed"));
}

#[test]
fn usage_errors_are_not_refusals() {
    assert_eq!(run(&["torsion"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
