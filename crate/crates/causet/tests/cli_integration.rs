//! End-to-end CLI runs: exit codes, determinism, and JSON round trips.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus_path(file: &str) -> String {
    // The corpus directory sits at the workspace root.
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("corpus");
    p.push(file);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causet"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn table_on_jamming_exits_zero() {
    let out = run(&["table", &corpus_path("jamming.json"), "--max-set", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("{B} affects {A,C} [irreducible]"));
    assert!(text.contains("{A,C} does not affect {B}"));
}

#[test]
fn loops_on_acl4_reports_type_4() {
    let out = run(&["loops", &corpus_path("acl4_set.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Type 4 witness"));
}

#[test]
fn embed_find_acl1_is_unsat_with_exit_one() {
    let out = run(&[
        "embed-find",
        &corpus_path("acl1_set.json"),
        "--require",
        "nontrivial",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("Unsat:"));
}

#[test]
fn parse_error_exits_two() {
    let out = run(&["table", "definitely-not-a-file.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        vec!["analyze", &corpus_path("acl4_model.json")],
        vec![
            "table",
            &corpus_path("finetuned_collider.json"),
            "--max-set",
            "2",
        ],
        vec![
            "stability",
            &corpus_path("acl4_set.json"),
            &corpus_path("acl4_embedding.json"),
            "--eps",
            "1/100",
            "--trials",
            "50",
            "--seed",
            "7",
        ],
        vec![
            "embed-find",
            &corpus_path("acl4_set.json"),
            "--require",
            "nondegenerate",
        ],
        vec![
            "embed-check",
            &corpus_path("acl4_set.json"),
            &corpus_path("acl4_embedding.json"),
            "--format",
            "svg",
        ],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "non-deterministic output for {args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn emitted_json_reparses_to_equal_values() {
    // Affects table JSON round trip.
    let out = run(&["table", &corpus_path("jamming.json"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let table: causet::affects::AffectsTable = serde_json::from_str(&text).unwrap();
    let re: causet::affects::AffectsTable = serde_json::from_str(&table.to_json()).unwrap();
    assert_eq!(table, re);

    // Found-embedding JSON round trip.
    let out = run(&[
        "embed-find",
        &corpus_path("acl4_set.json"),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let e = causet::spacetime::Embedding::from_json(&text).unwrap();
    let re = causet::spacetime::Embedding::from_json(&e.to_json()).unwrap();
    assert_eq!(e, re);
}

#[test]
fn builtin_names_resolve_without_files() {
    let out = run(&["analyze", "jamming"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["loops", "acl7_set"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Type 7 witness"));
}

#[test]
fn corpus_verify_passes() {
    let out = run(&["corpus-verify"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("all golden results regenerate"));
}

#[test]
fn analyze_reports_violation_with_exit_one() {
    let out = run(&["analyze", "dsep_violation"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("VIOLATED"));
}

#[test]
fn dsep_and_affects_queries() {
    let out = run(&[
        "dsep",
        &corpus_path("bell_classical.json"),
        "-x",
        "X",
        "-y",
        "B",
        "-z",
        "A",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("⊥d"));

    let out = run(&[
        "affects",
        &corpus_path("finetuned_collider.json"),
        "--source",
        "A,C",
        "--target",
        "B",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("{A,C} affects {B} [irreducible]"));
}

#[test]
fn corpus_dir_env_var_resolves_bare_names() {
    let mut dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    dir.pop();
    dir.pop();
    dir.push("corpus");
    let out = Command::new(env!("CARGO_BIN_EXE_causet"))
        .env("CAUSET_CORPUS_DIR", &dir)
        .args(["loops", "acl4_set.json"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("Type 4 witness"));
}
