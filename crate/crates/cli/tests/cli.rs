use std::path::Path;
use std::process::{Command, Output};

use lplq::blpq::{canonical_representation, BKpqSpec};
use lplq::counterexample::build_counterexample;
use lplq::transport::base_rearrangement;
use lplq::{mixed_norm, NormParams, StepFunction2D};
use serde_json::Value;

fn lplq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lplq")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(out)).unwrap()
}

fn write<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn norm_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let params = NormParams::new(2.0, 1.0).unwrap();
    let canon = canonical_representation(&BKpqSpec::new(vec![1, 2], params).unwrap());
    let cases = [
        (StepFunction2D::unit(), "1"),
        (StepFunction2D::rect((0.0, 0.5), (0.0, 1.0), 2.0).unwrap(), "1.4142135623730951"),
        (canon.atom(1, 0).clone(), ""),
    ];
    for (i, (f, expect)) in cases.iter().enumerate() {
        let file = write(dir.path(), &format!("f{i}.json"), f);
        let out = lplq(&["norm", &file, "--p", "2", "--q", "1"]);
        assert!(out.status.success());
        let text = stdout(&out);
        let first = text.lines().next().unwrap();
        assert_eq!(first, mixed_norm(f, params).to_string());
        if !expect.is_empty() {
            assert_eq!(first, *expect);
        }
        assert_eq!(text.lines().nth(1), Some("x0,x1,n"));
    }
}

#[test]
fn norm_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{\"base\": [1.0], \"fibers\": ").unwrap();
    let out = lplq(&["norm", bad_json.to_str().unwrap(), "--p", "2", "--q", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"base":[0.5,0.4],"fibers":[{"lens":[1],"vals":[1]},{"lens":[1],"vals":[1]}]}"#).unwrap();
    let out = lplq(&["norm", broken.to_str().unwrap(), "--p", "2", "--q", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let unit = write(dir.path(), "unit.json", &StepFunction2D::unit());
    assert_eq!(lplq(&["norm", &unit, "--p", "2", "--q", "2"]).status.code(), Some(2));
    assert_eq!(lplq(&["norm", &unit, "--p", "2"]).status.code(), Some(2));
}

#[test]
fn auh_demo_identical() {
    let v = json(&lplq(&["auh-demo", "--blocks", "1,2", "--p", "2", "--q", "1", "--trials", "1", "--identical"]));
    assert!(v["max_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn auh_demo_random_pairs() {
    for args in [["--blocks", "1,2", "--p", "2", "--q", "1"], ["--blocks", "2,3", "--p", "3", "--q", "2"]] {
        let mut full = vec!["auh-demo"];
        full.extend(args);
        full.extend(["--epsilon", "1e-3", "--trials", "10", "--seed", "7"]);
        let v = json(&lplq(&full));
        assert_eq!(v["trials"].as_array().unwrap().len(), 10);
        assert_eq!(v["all_below_epsilon"], true);
        for t in v["trials"].as_array().unwrap() {
            assert!(t["report"]["max_residual"].as_f64().unwrap() < 1e-3);
        }
    }
}

#[test]
fn auh_demo_is_deterministic() {
    let args = ["auh-demo", "--blocks", "2,1", "--p", "1", "--q", "2", "--trials", "6", "--seed", "42"];
    let a = lplq(&args);
    let b = lplq(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn counterexample_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("ce");
    let v = json(&lplq(&[
        "counterexample", "--p", "2", "--q", "1", "--resolution", "1024", "--out", out_dir.to_str().unwrap(),
    ]));
    assert_eq!(v["certificate"]["gap_degree"], 3);
    assert_eq!(v["certificate"]["gap"], "1/140");
    assert_eq!(v["isometry_all_equal"], true);
    assert_eq!(v["non_equimeasurable"]["step_equimeasurable"], false);
    assert!(v["obstruction"]["best_epsilon"].as_f64().unwrap() >= 0.005);
    for name in ["certificate.json", "isometry.json", "non_equimeasurable.json", "obstruction.json", "step_atoms.json"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let cert: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert, v["certificate"]);

    let v = json(&lplq(&["counterexample", "--p", "3", "--q", "1", "--resolution", "128"]));
    assert_eq!(v["certificate"]["gap_degree"], 4);

    let out = lplq(&["counterexample", "--p", "2.5", "--q", "1"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn equimeasure_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let params = NormParams::new(2.0, 1.0).unwrap();
    let canon = canonical_representation(&BKpqSpec::new(vec![1, 2], params).unwrap());
    let a = write(dir.path(), "canon.json", &canon.atoms);

    let csv = dir.path().join("moments.csv");
    let v = json(&lplq(&["equimeasure", &a, &a, "--p", "2", "--q", "1", "--out", csv.to_str().unwrap()]));
    assert_eq!(v["equimeasurable"], true);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("kind,key,degree,lhs,rhs,diff"));

    let swap = base_rearrangement(&[vec![(0.0, 0.2)]], &[vec![(0.8, 1.0)]], params).unwrap();
    let moved = write(dir.path(), "moved.json", &swap.apply_all(&canon.atoms));
    let v = json(&lplq(&["equimeasure", &a, &moved, "--p", "2", "--q", "1"]));
    assert_eq!(v["equimeasurable"], true);

    let bundle = build_counterexample(params, 256).unwrap();
    let f1 = write(dir.path(), "f1.json", &bundle.step[0].images);
    let f2 = write(dir.path(), "f2.json", &bundle.step[1].images);
    let v = json(&lplq(&["equimeasure", &f1, &f2, "--p", "2", "--q", "1"]));
    assert_eq!(v["equimeasurable"], false);
    assert_eq!(v["first_mismatch_degree"], 3);

    let single = write(dir.path(), "one.json", &StepFunction2D::unit());
    assert_eq!(lplq(&["equimeasure", &a, &single, "--p", "2", "--q", "1"]).status.code(), Some(4));
}
