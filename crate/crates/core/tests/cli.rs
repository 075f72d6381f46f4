mod common;

use std::path::Path;

use serde_json::Value;

use common::{fixture, run_cli, StubServer};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ask_writes_trace_and_annotation() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let png = dir.path().join("a.png");
    let cfg = fixture("demo.toml");
    let img = fixture("demo.png");
    let (code, out, err) = run_cli(&[
        "--config", s(&cfg), "ask", "--image", s(&img),
        "--question", "What color is the sign?", "--out", s(&trace), "--annotate", s(&png),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("The sign is red."), "{out}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert!(common::schema_errors(&doc).is_empty());
    assert_eq!(image::open(&png).unwrap().width(), 1344);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let (code, _, err) = run_cli(&[
        "--config", s(&fixture("demo.toml")), "--tau", "0.7", "--bias", "0.4",
        "ask", "--image", s(&fixture("demo.png")), "--question", "q?", "--out", s(&trace),
    ]);
    assert_eq!(code, 0, "{err}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(doc["config"]["tau"], 0.7);
    assert_eq!(doc["config"]["bias_b"], 0.4);
    assert_eq!(doc["config"]["min_node_size"], 336);
}

#[test]
fn missing_image_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run_cli(&[
        "--backend", "scripted", "ask", "--image", s(&dir.path().join("nope.png")),
        "--question", "q?", "--out", s(&dir.path().join("t.json")),
    ]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn unknown_config_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "tau = 0.7\nbogus-key = 3\n").unwrap();
    let (code, _, err) = run_cli(&["--config", s(&cfg), "simulate", "--trials", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("bogus-key"), "{err}");
}

#[test]
fn invalid_flag_values_exit_1() {
    let (code, _, _) = run_cli(&["--bias", "1.5", "simulate", "--trials", "1"]);
    assert_eq!(code, 1);
    let (code, _, _) = run_cli(&["simulate", "--target-size", "0"]);
    assert_eq!(code, 1);
    let (code, _, _) = run_cli(&["simulate", "--target-size", "400"]);
    assert_eq!(code, 1);
    let (code, _, _) = run_cli(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn bench_prints_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let cfg = fixture("bench/scripted.toml");
    let data = fixture("bench/items.jsonl");
    let (code, out, err) = run_cli(&[
        "--config", s(&cfg), "bench", "--dataset", s(&data), "--out", s(&report),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("items=3 scored=3 accuracy=1.000"), "{out}");
    assert!(!out.contains("baseline="));

    let (code, out, err) = run_cli(&[
        "--config", s(&cfg), "bench", "--dataset", s(&data), "--out", s(&report), "--baseline",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("baseline=0.000"), "{out}");
    assert!(out.contains("delta=+1.000"), "{out}");
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["summary"]["delta"], 1.0);
    assert_eq!(doc["items"].as_array().unwrap().len(), 3);
}

#[test]
fn empty_dataset_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("empty.jsonl");
    std::fs::write(&data, "").unwrap();
    let (code, _, err) = run_cli(&[
        "--backend", "scripted", "bench", "--dataset", s(&data),
        "--out", s(&dir.path().join("r.json")),
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn simulate_is_reproducible_and_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let csv = dir.path().join(format!("{name}.csv"));
        let (code, stdout, err) = run_cli(&[
            "--seed", "3", "simulate", "--trials", "30", "--sweep-tau", "0.6,0.8",
            "--out", s(&out), "--csv", s(&csv),
        ]);
        assert_eq!(code, 0, "{err}");
        (stdout, std::fs::read(&out).unwrap(), std::fs::read_to_string(&csv).unwrap())
    };
    let (out_a, json_a, csv_a) = run("a.json");
    let (out_b, json_b, csv_b) = run("b.json");
    assert_eq!(json_a, json_b);
    assert_eq!(csv_a, csv_b);
    assert_eq!(out_a, out_b);
    let doc: Value = serde_json::from_slice(&json_a).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["tau"], 0.6);
    assert_eq!(rows[1]["tau"], 0.8);
    assert_eq!(csv_a.lines().count(), 3);
}

#[test]
fn help_lists_every_flag() {
    let (code, out, _) = run_cli(&["-h"]);
    assert_eq!(code, 0);
    for flag in [
        "--config", "--seed", "--jobs", "--mode", "--tau", "--tau2", "--tau-min", "--delta",
        "--bias", "--backend", "--api-base", "--model", "ask", "bench", "simulate",
    ] {
        assert!(out.contains(flag), "missing {flag} in:\n{out}");
    }
    let (code, out, _) = run_cli(&["simulate", "--help"]);
    assert_eq!(code, 0);
    for flag in ["--sweep-tau", "--sweep-bias", "--sweep-delta", "--target-size", "--csv"] {
        assert!(out.contains(flag), "missing {flag}");
    }
}

#[test]
fn http_requires_an_api_base() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "backend = \"http\"\napi-base = \"\"\n").unwrap();
    let (code, _, err) = run_cli(&[
        "--config", s(&cfg), "ask", "--image", s(&fixture("demo.png")), "--question", "q?",
        "--out", s(&dir.path().join("t.json")),
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn transport_failure_exits_2() {
    let server = StubServer::start(vec![(503, Value::Null)]);
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run_cli(&[
        "--backend", "http", "--api-base", &server.base, "--model", "m",
        "ask", "--image", s(&fixture("demo.png")), "--question", "q?",
        "--out", s(&dir.path().join("t.json")),
    ]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(server.requests().len(), 3);
}
