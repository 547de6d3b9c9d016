//! End-to-end tests driving the binary the way a user would.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gramlog")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, content: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn k4_grammar(dir: &TempDir) -> String {
    write(dir, "k4.thue", "a -> a a\n")
}

fn empty_grammar(dir: &TempDir) -> String {
    write(dir, "empty.thue", "# no productions\n")
}

/// An automaton for the empty system: L_a = {a}, L_{a^-} = {a^-}.
fn k_fsa(dir: &TempDir) -> String {
    write(
        dir,
        "k.fsa.json",
        r#"{
            "states": ["s0", "s1", "t0", "t1"],
            "finals": ["s1", "t1"],
            "init": {"a": "s0", "a^-": "t0"},
            "delta": [["s0", "a", "s1"], ["t0", "a^-", "t1"]]
        }"#,
    )
}

#[test]
fn grammar_method_valid_formula_exits_zero() {
    let dir = TempDir::new().unwrap();
    let grammar = k4_grammar(&dir);
    let out = run(&[
        "prove",
        "--grammar",
        &grammar,
        "--formula",
        "[a]p => [a][a]p",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("VALID"));
}

#[test]
fn grammar_method_invalid_formula_prints_countermodel() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let out = run(&["prove", "--grammar", &grammar, "--formula", "p => [a]p"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("INVALID"));
    assert!(text.contains("countermodel"));
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = TempDir::new().unwrap();
    let grammar = k4_grammar(&dir);
    let out = run(&[
        "prove",
        "--grammar",
        &grammar,
        "--formula",
        "[a]p => [a][a]p",
        "--max-k",
        "0",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("BUDGET-EXHAUSTED"));
}

#[test]
fn auto_method_requires_fsa() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let out = run(&[
        "prove",
        "--grammar",
        &grammar,
        "--formula",
        "p | ~p",
        "--method",
        "auto",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_grammar_exits_three() {
    let dir = TempDir::new().unwrap();
    let grammar = write(&dir, "bad.thue", "a b c\n");
    let out = run(&["prove", "--grammar", &grammar, "--formula", "p"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn malformed_formula_exits_three() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let out = run(&["prove", "--grammar", &grammar, "--formula", "p =>"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn auto_method_agrees_with_grammar_method() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let fsa = k_fsa(&dir);
    for (formula, expected) in [
        ("[a](p => q) => ([a]p => [a]q)", 0),
        ("p => [a]<a^->p", 0),
        ("p => [a]p", 1),
    ] {
        let auto = run(&[
            "prove", "--grammar", &grammar, "--fsa", &fsa, "--method", "auto", "--formula", formula,
        ]);
        let gram = run(&["prove", "--grammar", &grammar, "--formula", formula]);
        assert_eq!(code(&auto), expected, "auto on {formula}");
        assert_eq!(code(&gram), expected, "grammar on {formula}");
    }
}

#[test]
fn json_output_is_parseable_and_carries_the_verdict() {
    let dir = TempDir::new().unwrap();
    let grammar = k4_grammar(&dir);
    let out = run(&[
        "prove",
        "--grammar",
        &grammar,
        "--formula",
        "[a]p => [a][a]p",
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["verdict"], "valid");
    assert!(v["trace"].is_object());
    assert!(v["stats"].is_array());
}

#[test]
fn json_countermodel_round_trips_through_check_model() {
    let dir = TempDir::new().unwrap();
    let grammar = k4_grammar(&dir);
    let out = run(&[
        "prove",
        "--grammar",
        &grammar,
        "--formula",
        "p => [a]p",
        "--json",
    ]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["verdict"], "invalid");
    let model = write(&dir, "model.json", &v["countermodel"].to_string());
    let check = run(&[
        "check-model",
        "--model",
        &model,
        "--grammar",
        &grammar,
        "--formula",
        "p => [a]p",
    ]);
    assert_eq!(code(&check), 0, "stdout: {}", stdout(&check));
    assert!(stdout(&check).contains("frame conditions: ok"));
}

#[test]
fn check_model_reports_frame_violation() {
    let dir = TempDir::new().unwrap();
    let grammar = k4_grammar(&dir);
    // Two a-steps but no direct edge: not transitive.
    let model = write(
        &dir,
        "intransitive.json",
        r#"{
            "worlds": ["w0", "w1", "w2"],
            "rel": {"a": [["w0", "w1"], ["w1", "w2"]]},
            "val": {"p": ["w0"]}
        }"#,
    );
    let out = run(&["check-model", "--model", &model, "--grammar", &grammar, "--formula", "p"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("VIOLATED"));
}

#[test]
fn batch_mode_reports_worst_exit_code() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let batch = write(&dir, "batch.txt", "p | ~p\np => [a]p\n(p & q) => p\n");
    let out = run(&["prove", "--grammar", &grammar, "--batch", &batch, "--jobs", "2"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert_eq!(text.matches("VALID").count(), 3); // INVALID contains VALID
    assert!(text.contains("INVALID"));
}

#[test]
fn formula_file_matches_inline_formula() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let file = write(&dir, "goal.txt", "[a](p & q) => [a]p\n");
    let from_file = run(&["prove", "--grammar", &grammar, "--formula-file", &file]);
    let inline = run(&["prove", "--grammar", &grammar, "--formula", "[a](p & q) => [a]p"]);
    assert_eq!(code(&from_file), 0);
    assert_eq!(code(&inline), 0);
}

#[test]
fn validate_fsa_accepts_a_matching_automaton() {
    let dir = TempDir::new().unwrap();
    let grammar = empty_grammar(&dir);
    let fsa = k_fsa(&dir);
    let out = run(&["validate-fsa", "--grammar", &grammar, "--fsa", &fsa]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("ok"));
}

#[test]
fn validate_fsa_rejects_a_mismatched_automaton() {
    let dir = TempDir::new().unwrap();
    // The k4 system needs L_a = a+, but the automaton only accepts {a}.
    let grammar = k4_grammar(&dir);
    let fsa = k_fsa(&dir);
    let out = run(&["validate-fsa", "--grammar", &grammar, "--fsa", &fsa]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("disagreement"));
}

#[test]
fn missing_input_file_exits_three() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.thue");
    let out = run(&[
        "prove",
        "--grammar",
        missing.to_str().unwrap(),
        "--formula",
        "p",
    ]);
    assert_eq!(code(&out), 3);
    assert!(Path::new(bin()).exists());
}
