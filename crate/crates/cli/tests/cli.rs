use std::process::Command;

use lgifs::export::polyline_point_count;
use lgifs_cli::{run, EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
use serde_json::Value;

fn lgifs(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("lgifs").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn records(text: &str) -> Vec<Value> {
    text.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn record<'a>(recs: &'a [Value], check: &str) -> &'a Value {
    recs.iter().find(|r| r["check"] == check).unwrap()
}

#[test]
fn validate_dekking_passes() {
    let (code, out, _) = lgifs(&["validate", "dekking"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("chain condition: pass"));
    let (code, out, _) = lgifs(&["--report", "validate", "dekking"]);
    assert_eq!(code, EXIT_OK);
    let recs = records(&out);
    let chain = record(&recs, "chain_condition");
    assert_eq!(chain["status"], "pass");
    assert_eq!(chain["tolerance"], 1e-9);
    assert_eq!(
        record(&recs, "tail_3")["value"],
        serde_json::json!([-1.0, 0.0])
    );
    for r in &recs {
        for key in ["check", "status", "value", "tolerance"] {
            assert!(r.get(key).is_some(), "{r}");
        }
    }
}

#[test]
fn measure_square() {
    let (code, out, _) = lgifs(&["--report", "measure", "square"]);
    assert_eq!(code, EXIT_OK);
    let recs = records(&out);
    assert_eq!(record(&recs, "lambda")["value"], 6.0);
    assert_eq!(record(&recs, "alpha")["value"], 2.0);
    assert_eq!(
        record(&recs, "weights_2")["value"]
            .as_array()
            .unwrap()
            .len(),
        5
    );
}

#[test]
fn param_at_zero_is_the_head() {
    let (code, out, _) = lgifs(&["param", "square", "--vertex", "1", "--t", "0"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.trim(), "psi_1(0) = (0, 0)");
    let (_, out, _) = lgifs(&["--report", "param", "mcmullen", "--vertex", "3", "--t", "1"]);
    let v = &records(&out)[0]["value"];
    // tail_3 = (1, 0)
    assert!((v[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v[1].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn unchained_system_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("printed.spec");
    let text = lgifs::corpus::source("mcmullen")
        .unwrap()
        .replace("digit = [2.0, 1.0]", "digit = [1.0, 1.0]");
    std::fs::write(&path, text).unwrap();
    let (code, out, _) = lgifs(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(out.contains("chain condition: fail"));
    assert!(out.contains("vertex 1: ranks 2 and 3"));
    let (code, _, err) = lgifs(&[
        "param",
        path.to_str().unwrap(),
        "--vertex",
        "1",
        "--t",
        "0.5",
    ]);
    assert_eq!(code, EXIT_VALIDATION);
    assert!(err.contains("chain condition"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.spec");
    std::fs::write(&broken, "dimension = 2\nmatrix = [3, 0,").unwrap();
    assert_eq!(
        lgifs(&["validate", broken.to_str().unwrap()]).0,
        EXIT_VALIDATION
    );
    assert_eq!(lgifs(&["validate", "/definitely/missing.spec"]).0, EXIT_IO);
    assert_eq!(lgifs(&["bogus"]).0, EXIT_USAGE);
    assert_eq!(
        lgifs(&["param", "square", "--vertex", "0", "--t", "0"]).0,
        EXIT_USAGE
    );
    assert_eq!(
        lgifs(&["param", "square", "--vertex", "1", "--t", "2"]).0,
        EXIT_USAGE
    );
    assert_eq!(lgifs(&["norm", "square", "--x", "1,2,3"]).0, EXIT_USAGE);
    assert_eq!(lgifs(&["--help"]).0, EXIT_OK);
    let out_dir = dir.path().join("no/such/dir/c.svg");
    let (code, _, _) = lgifs(&[
        "curve",
        "square",
        "--vertex",
        "1",
        "--depth",
        "1",
        "--format",
        "svg",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn curve_export() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("sq.svg");
    let (code, out, _) = lgifs(&[
        "curve",
        "square",
        "--vertex",
        "1",
        "--depth",
        "3",
        "--format",
        "svg",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(
        polyline_point_count(&std::fs::read_to_string(&svg).unwrap()),
        Some(217)
    );

    let csv = dir.path().join("dk.csv");
    lgifs(&[
        "curve",
        "dekking",
        "--vertex",
        "4",
        "--depth",
        "1",
        "--format",
        "csv",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("x,y\n"));

    let rounded = dir.path().join("r.svg");
    lgifs(&[
        "curve",
        "mcmullen",
        "--vertex",
        "2",
        "--depth",
        "2",
        "--format",
        "svg",
        "--out",
        rounded.to_str().unwrap(),
        "--rounded-corners",
    ]);
    assert!(std::fs::read_to_string(&rounded)
        .unwrap()
        .contains("<path d=\"M"));
}

#[test]
fn norm_and_holder() {
    let (code, out, _) = lgifs(&["--report", "norm", "square", "--x", "1,0"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(records(&out)[0]["value"], 1.0);
    let (code, out, _) = lgifs(&["--report", "norm", "square", "--x", "-3,0"]);
    assert_eq!(code, EXIT_OK);
    assert!((records(&out)[0]["value"].as_f64().unwrap() - 6f64.sqrt()).abs() < 1e-12);

    let (code, out, _) = lgifs(&[
        "--report", "holder", "square", "--vertex", "1", "--pairs", "500", "--seed", "4",
    ]);
    assert_eq!(code, EXIT_OK);
    let recs = records(&out);
    assert_eq!(record(&recs, "omega_ratio_max")["status"], "pass");
    assert!(record(&recs, "euclid_slope")["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn binary_runs() {
    let out = Command::new(env!("CARGO_BIN_EXE_lgifs"))
        .args(["measure", "mcmullen"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("lambda = 5"));
    let bad = Command::new(env!("CARGO_BIN_EXE_lgifs"))
        .arg("validate")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
}
