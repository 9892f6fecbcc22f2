//! End-to-end CLI runs against the bundled fixtures.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .join("core/fixtures")
}

fn lexeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexeval"))
        .args(args)
        .env_remove("LEXEVAL_API_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

#[test]
fn ingest_with_stats() {
    let lexicon = fixtures().join("mini_lexicon.jsonl");
    let output = lexeval(&["ingest", "--lexicon", lexicon.to_str().unwrap(), "--stats"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = stdout(&output);
    assert!(text.contains("entries"), "{text}");
    assert!(text.contains("options"), "{text}");
    assert!(text.contains("unique words"), "{text}");
}

#[test]
fn annotate_pos_then_eval_words() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = fixtures().join("mini_lexicon.jsonl");
    let corpus = fixtures().join("mini_corpus.tsv");
    let out = dir.path().join("run");

    let output = lexeval(&[
        "annotate",
        "--method",
        "pos",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--in",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let annotations = out.join("annotations-pos.jsonl");
    assert!(annotations.exists());
    assert!(out.join("manifest.json").exists(), "every run writes a manifest");

    let output = lexeval(&[
        "eval-words",
        "--gold",
        corpus.to_str().unwrap(),
        "--pred",
        annotations.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = stdout(&output);
    assert!(text.contains("80.0"), "pos accuracy should render as 80.0:\n{text}");
    assert!(text.contains("Per-level F1"), "{text}");
}

#[test]
fn llm_without_api_key_exits_2_with_guidance() {
    let lexicon = fixtures().join("mini_lexicon.jsonl");
    let corpus = fixtures().join("mini_corpus.tsv");
    let output = lexeval(&[
        "annotate",
        "--method",
        "llm",
        "--backend",
        "http",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--in",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("LEXEVAL_API_KEY"), "{err}");
    assert!(err.contains("mock-uniform"), "guidance should list offline backends: {err}");
}

#[test]
fn unknown_flag_exits_2() {
    let output = lexeval(&["annotate", "--definitely-not-a-flag"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_1() {
    let output = lexeval(&["ingest", "--lexicon", "/nonexistent/lexicon.jsonl"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));
}

#[test]
fn semantic_eval_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = fixtures().join("mini_lexicon.jsonl");
    let output = lexeval(&[
        "semantic-eval",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--backend",
        "mock-oracle",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = stdout(&output);
    assert!(text.contains("avg."), "{text}");
    assert!(text.contains("100.0"), "oracle should be perfect: {text}");
}

#[test]
fn essay_pipeline_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let lexicon = fixtures().join("mini_lexicon.jsonl");
    let essays = fixtures().join("essays");
    let scores = fixtures().join("essay_scores.tsv");
    let out = dir.path().join("essay");
    let output = lexeval(&[
        "essay-eval",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--in",
        essays.to_str().unwrap(),
        "--scores",
        scores.to_str().unwrap(),
        "--method",
        "pos",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout(&output).contains("PCC"));
    let results = out.join("results.json");
    assert!(results.exists());
    assert!(out.join("curves.tsv").exists());

    // Features from the annotation file.
    let features_out = dir.path().join("features");
    let output = lexeval(&[
        "essay-features",
        "--in",
        out.join("annotations-pos.jsonl").to_str().unwrap(),
        "--out",
        features_out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let features = std::fs::read_to_string(features_out.join("features.jsonl")).unwrap();
    assert_eq!(features.lines().count(), 6);
    assert!(features.contains("composite"));

    // HTML report renders deterministically.
    let report_dir = dir.path().join("report");
    for _ in 0..2 {
        let output = lexeval(&[
            "report",
            "--results",
            results.to_str().unwrap(),
            "--format",
            "html",
            "--out",
            report_dir.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    }
    let html = std::fs::read_to_string(report_dir.join("report.html")).unwrap();
    assert!(html.contains("<svg"), "curves should embed as SVG");
    let first = std::fs::read(report_dir.join("report.html")).unwrap();
    let output = lexeval(&[
        "report",
        "--results",
        results.to_str().unwrap(),
        "--format",
        "html",
        "--out",
        report_dir.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    assert_eq!(first, std::fs::read(report_dir.join("report.html")).unwrap());

    // Consistency over the same corpus.
    let output = lexeval(&[
        "consistency",
        "--lexicon",
        lexicon.to_str().unwrap(),
        "--in",
        essays.to_str().unwrap(),
        "--scores",
        scores.to_str().unwrap(),
        "--words",
        "work",
        "--out",
        dir.path().join("consistency").to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout(&output).contains(">=B1"));
}

#[test]
fn show_config_prints_merged_defaults() {
    let output = lexeval(&["annotate", "--show-config", "--seed", "17"]);
    assert!(output.status.success());
    let config: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(config["seed"], 17);
    assert_eq!(config["jobs"], 1);
    assert_eq!(config["methods"][0], "pos");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("lexeval.json");
    std::fs::write(&config_path, r#"{"seed": 123, "jobs": 3}"#).unwrap();
    let output = lexeval(&[
        "annotate",
        "--config",
        config_path.to_str().unwrap(),
        "--show-config",
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let config: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(config["seed"], 123);
    assert_eq!(config["jobs"], 3);
}
