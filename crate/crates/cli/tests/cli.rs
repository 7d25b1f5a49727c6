use std::path::{Path, PathBuf};

use serde_json::Value;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn concert() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures/semdesc/concert.xml")
        .to_string_lossy()
        .into_owned()
}

/// Exit code, stdout, stderr.
fn pdm(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pdm").chain(args.iter().copied());
    let code = pdm_cli::run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(pdm(&["frobnicate"]).0, 2);
    assert_eq!(pdm(&["demo", "g1g2", "--bogus"]).0, 2);
    assert_eq!(pdm(&["demo", "no-such-scenario"]).0, 2);
    assert_eq!(pdm(&[]).0, 2);
    let (code, _, err) = pdm(&["target", ""]);
    assert_eq!(code, 2);
    assert!(err.contains("no attributes"));
    assert_eq!(pdm(&["target", "a,z"]).0, 2);
}

#[test]
fn help_exits_0() {
    let (code, out, _) = pdm(&["--help"]);
    assert_eq!(code, 0);
    for cmd in [
        "validate", "compile", "generate", "simulate", "report", "demo",
    ] {
        assert!(out.contains(cmd), "{cmd}");
    }
}

#[test]
fn validate_reports_and_sets_exit_code() {
    let (code, out, _) = pdm(&["validate", &data("g1.json")]);
    assert_eq!((code, out.as_str()), (0, "package: ok\n"));

    let (code, out, _) = pdm(&["validate", &data("bad_package.json")]);
    assert_eq!(code, 1);
    assert!(out.starts_with("package: invalid"));
    assert!(out.contains("package id"), "{out}");

    let (code, out, _) = pdm(&[
        "validate",
        &data("bad_package.json"),
        "--format",
        "structured",
    ]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["valid"], false);
    assert!(v["issues"].as_array().unwrap().len() >= 3);

    // the concert document references a node it never declares
    let (code, out, _) = pdm(&["validate", &concert()]);
    assert_eq!(code, 0);
    assert!(out.contains("warning"), "{out}");

    assert_eq!(pdm(&["validate", &data("missing.json")]).0, 1);
}

#[test]
fn validate_accepts_scenarios_and_binary_packages() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    let (code, _, _) = pdm(&[
        "scenario",
        "coverage-traverse",
        "--out",
        scen.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let (code, out, _) = pdm(&["validate", scen.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, "scenario: ok\n"));

    let bin = dir.path().join("p.pdm");
    assert_eq!(
        pdm(&["encode", &data("g1.json"), "--out", bin.to_str().unwrap()]).0,
        0
    );
    let (code, out, _) = pdm(&["validate", bin.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, "package: ok\n"));
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("p.pdm");
    assert_eq!(
        pdm(&["encode", &data("g1.json"), "--out", bin.to_str().unwrap()]).0,
        0
    );
    let bytes = std::fs::read(&bin).unwrap();
    assert!(bytes.starts_with(b"PDM1"));
    let (code, hex, _) = pdm(&["encode", &data("g1.json")]);
    assert_eq!(code, 0);
    assert_eq!(hex.trim().len(), bytes.len() * 2);

    let (code, json, _) = pdm(&["decode", bin.to_str().unwrap()]);
    assert_eq!(code, 0);
    let back = dir.path().join("back.json");
    std::fs::write(&back, &json).unwrap();
    let (_, again, _) = pdm(&["encode", back.to_str().unwrap()]);
    assert_eq!(again, hex);
}

#[test]
fn compile_prints_the_script() {
    let (code, out, _) = pdm(&["compile", &concert()]);
    assert_eq!(code, 0);
    for needle in ["Yim", "Waltz of the Flowers", "Concert Hall"] {
        assert!(out.contains(needle), "{needle}: {out}");
    }
    let (_, out, _) = pdm(&["compile", &concert(), "--format", "structured"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["graph_wire_size"].as_u64().unwrap() < v["script_bytes"].as_u64().unwrap());
}

#[test]
fn generate_modes_and_seeds() {
    let g1 = data("g1.json");
    let g2 = data("g2.json");
    let (code, out, _) = pdm(&["generate", &g1, "--seed", "3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("seed: 3\nmode O_S"), "{out}");

    let (code, out, _) = pdm(&[
        "generate",
        &g1,
        &g2,
        "--mode",
        "m2",
        "--format",
        "structured",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mode"], "MultiAsync");
    assert_eq!(v["units"].as_array().unwrap().len(), 3);

    let a = pdm(&["generate", &g1, &g2, "--seed", "1"]).1;
    let b = pdm(&["generate", &g1, &g2, "--seed", "1"]).1;
    let c = pdm(&["generate", &g1, &g2, "--seed", "2"]).1;
    assert_eq!(a, b);
    assert_ne!(a, c);

    // O_S takes exactly one package
    assert_eq!(pdm(&["generate", &g1, &g2, "--mode", "os"]).0, 1);
    assert_eq!(pdm(&["generate", &data("bad_package.json")]).0, 1);
    assert_eq!(pdm(&["generate", &g1, "--density", "0"]).0, 1);
}

#[test]
fn demo_g1g2_phase_table() {
    let (code, out, _) = pdm(&["demo", "g1g2", "--seed", "7"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("seed: 7\n"));
    let rows: Vec<&str> = out
        .lines()
        .skip_while(|l| *l != "phases")
        .skip(2)
        .take(3)
        .collect();
    let features: Vec<&str> = rows
        .iter()
        .map(|r| r.split_whitespace().last().unwrap())
        .collect();
    assert_eq!(features, ["{G1}", "{G1,G2}", "{G2}"]);
    assert!(out.contains("baseline bytes        37500000"));
    assert!(out.contains("model transfer bytes  23200000000"));
}

#[test]
fn demo_coverage_traverse_phase_table() {
    let (code, out, _) = pdm(&["demo", "coverage-traverse"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("seed: 0\n"));
    let features: Vec<&str> = out
        .lines()
        .skip_while(|l| *l != "phases")
        .skip(2)
        .take(3)
        .map(|r| r.split_whitespace().last().unwrap())
        .collect();
    assert_eq!(features, ["{A,B,C}", "{C,D}", "{A,E,F}"]);
}

#[test]
fn simulate_writes_trace_and_report_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    let trace = dir.path().join("t.json");
    pdm(&["scenario", "g1g2", "--out", scen.to_str().unwrap()]);
    let (code, out, _) = pdm(&[
        "simulate",
        scen.to_str().unwrap(),
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("ratio"));

    let (code, report, _) = pdm(&["report", trace.to_str().unwrap(), "--format", "structured"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["baseline_bytes"], 37_500_000);
    assert_eq!(v["model_transfer_bytes"], 23_200_000_000u64);
    assert_eq!(v["degenerate"], false);
    assert!(v["ratio"].as_f64().unwrap() < 0.005);

    let (_, text, _) = pdm(&["report", trace.to_str().unwrap()]);
    assert!(out.contains(text.lines().next().unwrap().trim()));
}

#[test]
fn simulate_rejects_invalid_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scen: PathBuf = dir.path().join("s.json");
    let (_, src, _) = pdm(&["scenario", "g1g2"]);
    std::fs::write(
        &scen,
        src.replace("\"duration_ms\": 30000", "\"duration_ms\": 0"),
    )
    .unwrap();
    let (code, _, err) = pdm(&["simulate", scen.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("duration"), "{err}");
    let (code, _, _) = pdm(&["validate", scen.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn target_prints_only_requested_features() {
    let (code, out, _) = pdm(&["target", "a,b,d"]);
    assert_eq!(code, 0);
    assert!(out.contains("features {a,b,d}"));
    let (_, out, _) = pdm(&["target", "e", "--format", "structured"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["main"], "AD-e");
    assert_eq!(v["subs"].as_array().unwrap().len(), 0);
}
