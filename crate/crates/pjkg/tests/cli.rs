//! Integration tests for the `pjkg` binary: the exit-code contract and
//! the end-to-end build/metrics/export/bench flow over generated
//! fixtures.

use std::path::Path;
use std::process::{Command, Output};

fn pjkg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pjkg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stderr: {}",
        stderr_of(output)
    );
}

#[test]
fn missing_input_directory_is_a_usage_error() {
    let out = pjkg(&["build", "--input", "/nonexistent/corpus", "--out", "/tmp/x"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("does not exist"));
}

#[test]
fn unknown_backend_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pjkg(&[
        "build",
        "--input",
        dir.path().to_str().unwrap(),
        "--out",
        "/tmp/x",
        "--backend",
        "carrier-pigeon",
    ]);
    assert_exit(&out, 2);
}

#[test]
fn unknown_export_format_is_a_usage_error() {
    let out = pjkg(&["export", "--graph", "/tmp/missing.json", "--format", "dot", "--out", "/tmp/x"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("dot"));
}

#[test]
fn bench_rejects_zero_concurrency_and_single_scale_factor() {
    let out = pjkg(&["bench", "--graph", "/tmp/missing.json", "--concurrency", "0"]);
    assert_exit(&out, 2);
    let out = pjkg(&["bench", "--graph", "/tmp/missing.json", "--scale", "2"]);
    assert_exit(&out, 2);
}

#[test]
fn semantic_metrics_without_truth_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_golden(dir.path());
    let out = pjkg(&["metrics", "semantic", "--graph", graph.to_str().unwrap()]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("--truth"));
}

#[test]
fn missing_graph_file_is_a_runtime_error() {
    let out = pjkg(&["metrics", "structural", "--graph", "/tmp/definitely-missing.json"]);
    assert_exit(&out, 1);
}

/// Writes the golden corpus, builds it, and returns the path of the
/// first patient's graph json.
fn build_golden(dir: &Path) -> std::path::PathBuf {
    let corpus = dir.join("corpus");
    let out = pjkg(&["gen-fixtures", "--out", corpus.to_str().unwrap(), "--golden"]);
    assert_exit(&out, 0);
    let graphs = dir.join("graphs");
    let out = pjkg(&[
        "build",
        "--input",
        corpus.to_str().unwrap(),
        "--out",
        graphs.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    graphs.join("PA56789.json")
}

#[test]
fn build_metrics_export_flow_on_golden_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let graph = build_golden(dir.path());
    assert!(graph.is_file());
    let manifest = std::fs::read_to_string(graph.parent().unwrap().join("manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest["patients"].as_array().unwrap().len(), 2);
    for patient in manifest["patients"].as_array().unwrap() {
        assert!(patient["skipped"].as_array().unwrap().is_empty());
    }

    // structural metrics over the built graph, json output
    let out = pjkg(&[
        "metrics",
        "structural",
        "--graph",
        graph.to_str().unwrap(),
        "--json",
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["icr"].as_f64().unwrap(), 1.0);

    // semantic metrics of the graph against the generated ground truth:
    // PA56789 is a strict subset of the two-patient truth, so precision
    // is perfect and recall is partial
    let truth = dir.path().join("corpus/ground_truth/truth.json");
    let out = pjkg(&[
        "metrics",
        "semantic",
        "--graph",
        graph.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--json",
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["combined"]["precision"].as_f64().unwrap(), 1.0);
    assert!(report["combined"]["recall"].as_f64().unwrap() < 1.0);

    // export in every format
    for format in ["json", "graphml", "cypher-script"] {
        let target = dir.path().join(format!("export.{format}"));
        let out = pjkg(&[
            "export",
            "--graph",
            graph.to_str().unwrap(),
            "--format",
            format,
            "--out",
            target.to_str().unwrap(),
        ]);
        assert_exit(&out, 0);
        assert!(std::fs::metadata(&target).unwrap().len() > 0);
    }

    // a short bench run with scalability factors
    let out = pjkg(&[
        "bench",
        "--graph",
        graph.to_str().unwrap(),
        "--queries",
        "200",
        "--scale",
        "1,2",
        "--json",
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["throughput_qps"].as_f64().unwrap() > 0.0);
    assert!(report["scalability_pct"].is_number());
}

#[test]
fn gen_fixtures_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for target in [&a, &b] {
        let out = pjkg(&[
            "gen-fixtures",
            "--out",
            target.to_str().unwrap(),
            "--patients",
            "4",
            "--seed",
            "7",
        ]);
        assert_exit(&out, 0);
    }
    let fixture_a = std::fs::read(a.join("mock_responses.json")).unwrap();
    let fixture_b = std::fs::read(b.join("mock_responses.json")).unwrap();
    assert_eq!(fixture_a, fixture_b);
    let truth_a = std::fs::read(a.join("ground_truth/truth.json")).unwrap();
    let truth_b = std::fs::read(b.join("ground_truth/truth.json")).unwrap();
    assert_eq!(truth_a, truth_b);
}
