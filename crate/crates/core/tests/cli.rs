use std::path::Path;
use std::process::{Command, Output};

use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stylecloze"));
    cmd.env_remove("STYLECLOZE_DATA");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let corpus = SyntheticCorpus::generate(&SyntheticConfig {
        roc_stories: 200,
        cloze_dev: 40,
        cloze_test: 20,
        paired: 10,
        ..SyntheticConfig::default()
    });
    corpus.write_to(dir.path()).unwrap();
    dir
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), stylecloze::fingerprint_bytes(&std::fs::read(&p).unwrap()))
        })
        .collect();
    out.sort();
    out
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = run(&[]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_exits_1() {
    let out = run(&["exp9"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn schema_lists_every_layout() {
    let out = run(&["schema"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("id,premise,alt1,alt2,gold"));
    assert!(text.contains("RandomFifthSentenceQuiz1"));
}

#[test]
fn missing_inputs_and_config_are_usage_errors() {
    assert_eq!(code(&run(&["exp1"])), 1);
    assert_eq!(code(&run(&["exp1", "--config", "/nonexistent/c.json"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"sede": 3}"#).unwrap();
    assert_eq!(code(&run(&["exp1", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn malformed_csv_is_a_data_error() {
    let dir = data_dir();
    let dev = dir.path().join("cloze_val_synthetic.csv");
    let mut text = std::fs::read_to_string(&dev).unwrap();
    text.push_str("broken,row\n");
    std::fs::write(&dev, text).unwrap();
    let out = run(&["exp1", "--data", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed row"));
}

#[test]
fn exp1_writes_reports_and_is_reproducible() {
    let dir = data_dir();
    let data = dir.path().to_str().unwrap();
    let before = digests(dir.path());
    let out_dir = tempfile::tempdir().unwrap();
    let out = out_dir.path().to_str().unwrap();

    let first = run(&["exp1", "--data", data, "--out", out, "--json"]);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let second = run(&["exp1", "--data", data, "--out", out, "--json"]);
    assert_eq!(String::from_utf8_lossy(&first.stdout), String::from_utf8_lossy(&second.stdout));

    let json: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(json["mean_accuracy"], 1.0);
    assert!(json["config"].is_object());
    assert!(json["dataset_fingerprints"][0].is_string());
    let written: Vec<_> = std::fs::read_dir(out_dir.path()).unwrap().collect();
    assert!(written.len() >= 2);

    let other_seed = run(&["exp1", "--data", data, "--out", out, "--json", "--seed", "99"]);
    assert!(first.stdout != other_seed.stdout);
    assert_eq!(before, digests(dir.path()));
}

#[test]
fn missed_check_exits_3() {
    let dir = data_dir();
    let out = run(&["exp1", "--data", dir.path().to_str().unwrap(), "--check"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn environment_variable_names_the_data_directory() {
    let dir = data_dir();
    let out = bin().env("STYLECLOZE_DATA", dir.path()).args(["cloze"]).output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn subcommands_leave_inputs_untouched() {
    let dir = data_dir();
    let data = dir.path().to_str().unwrap();
    let before = digests(dir.path());
    for cmd in ["stats", "exp2", "cloze", "lm-cloze", "combine", "ablate", "salient", "paired-choice"] {
        let out = run(&[cmd, "--data", data]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty());
    }
    assert_eq!(before, digests(dir.path()));
}
