use std::path::Path;
use std::process::{Command, Output};

fn evext(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evext"))
        .args(args)
        .current_dir(cwd)
        .env_remove("EVEXT_CACHE_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = evext(args, cwd);
    assert!(out.status.success(), "evext {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = r#"
output_dir = "run"
seed = 3

[data]
format = "wikievents"
train = "data/train.jsonl"
test = "data/test.jsonl"
train_coref = "data/train_coref.jsonl"
test_coref = "data/test_coref.jsonl"

[tagger]
epochs = 3
pseudo_epochs = 1

[generator.train]
epochs = 2

[generator.model]
hidden = 12
"#;

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--output-dir", "data", "--train-docs", "12", "--test-docs", "4", "--seed", "2"], dir.path());
    std::fs::write(dir.path().join("run.toml"), CONFIG).unwrap();
    dir
}

#[test]
fn pipeline_runs_resumes_and_scores() {
    let dir = setup();
    let p = dir.path();
    ok(&["pipeline", "--config", "run.toml"], p);
    let scores: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("run/scores.json")).unwrap()).unwrap();
    let settings: Vec<&str> = scores.as_array().unwrap().iter().map(|r| r["setting"].as_str().unwrap()).collect();
    assert_eq!(settings, ["trigger-identification", "trigger-classification", "arg-I-head", "arg-C-head"]);
    for name in ["embedder.json", "class_vectors.jsonl", "tagger.json", "triggers.jsonl", "arguments.jsonl", "generations.jsonl"] {
        assert!(p.join("run").join(name).exists(), "{name} missing");
    }

    // A second run reuses every stage and reproduces the scores.
    let before = std::fs::read_to_string(p.join("run/scores.json")).unwrap();
    ok(&["pipeline", "--config", "run.toml"], p);
    assert_eq!(std::fs::read_to_string(p.join("run/scores.json")).unwrap(), before);

    // Standalone scoring of the same files.
    let text = ok(
        &["score", "--gold", "run/test.docs.jsonl", "--triggers", "run/triggers.jsonl", "--arguments", "run/arguments.jsonl", "--json"],
        p,
    );
    let reports: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(reports.as_array().unwrap().iter().any(|r| r["setting"] == "arg-C-informative"));
}

#[test]
fn changed_config_in_same_directory_is_refused() {
    let dir = setup();
    let p = dir.path();
    ok(&["pipeline", "--config", "run.toml", "--gold-triggers", "--set", "generator.train.epochs=1"], p);
    let out = evext(&["pipeline", "--config", "run.toml", "--gold-triggers", "--set", "generator.train.epochs=2"], p);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));
}

#[test]
fn convert_stats_and_splits() {
    let dir = setup();
    let p = dir.path();
    ok(
        &[
            "convert",
            "--format",
            "wikievents",
            "--input",
            "data/train.jsonl",
            "--coref",
            "data/train_coref.jsonl",
            "--output",
            "train.docs.jsonl",
        ],
        p,
    );
    let stats = ok(&["stats", "--docs", "train.docs.jsonl"], p);
    assert!(stats.contains("12 documents") && stats.contains("Informative: mean distance"), "{stats}");
    ok(&["build-splits", "--docs", "train.docs.jsonl", "--mode", "freq", "--output", "freq.jsonl"], p);
    let lines = std::fs::read_to_string(p.join("freq.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 12);
}

#[test]
fn bad_override_is_reported() {
    let dir = setup();
    let out = evext(&["pipeline", "--config", "run.toml", "--set", "generator.backend=bart"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bart"));
}
