mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use freedyn::cli::{EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_INPUT, EXIT_RESOURCE, EXIT_UNSUPPORTED, EXIT_USAGE};
use freedyn::document::{current_from_json, current_to_json, tree_from_json, tree_to_json};

fn freedyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freedyn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fib() -> String {
    common::config_path("fibonacci.toml").display().to_string()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = r#"
version = 1
seeds = ["a"]
depth = 3

[context]
rank = 2

[automorphisms.phi]
images = { a = "a b", b = "a" }
inverse = { a = "b", b = "b' a" }
assert_iwip = true
assert_atoroidal = false
assert_train_track_on_rose = true

[experiments.fixed_points]
automorphism = "phi"
"#;

#[test]
fn reduce_prints_the_reduced_word() {
    let o = freedyn(&["--config", &fib(), "--out", tempfile::tempdir().unwrap().path().to_str().unwrap(), "reduce", "a b b' a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next(), Some("a a"));
}

#[test]
fn pair_and_eigenvalue_print_known_values() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let o = freedyn(&["--config", &fib(), "--out", dir, "pair", "a b a b"]);
    assert_eq!(stdout(&o).lines().next(), Some("4"));
    let o = freedyn(&["--config", &fib(), "--out", dir, "eigenvalue"]);
    assert!(stdout(&o).contains("1.61803398875 (matrix)"), "{}", stdout(&o));
}

#[test]
fn format_flag_selects_outputs() {
    for (flag, json, csv) in [("json", true, false), ("csv", false, true), ("both", true, true)] {
        let out = tempfile::tempdir().unwrap();
        let o = freedyn(&["--config", &fib(), "--out", out.path().to_str().unwrap(), "--format", flag, "apply"]);
        assert!(o.status.success());
        assert_eq!(out.path().join("apply.json").exists(), json);
        assert_eq!(out.path().join("apply.csv").exists(), csv);
    }
}

#[test]
fn reports_fix_floats_at_twelve_digits() {
    let out = tempfile::tempdir().unwrap();
    let o = freedyn(&["--config", &fib(), "--out", out.path().to_str().unwrap(), "--format", "both", "eigenvalue"]);
    assert!(o.status.success());
    let json = fs::read_to_string(out.path().join("eigenvalue.json")).unwrap();
    assert!(json.contains("\"value\": 1.61803398875"), "{json}");
    let csv = fs::read_to_string(out.path().join("eigenvalue.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",1.61803398875,"), "{csv}");
}

#[test]
fn exit_codes_are_distinct() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    // usage
    assert_eq!(freedyn(&["--config", &fib(), "frobnicate"]).status.code(), Some(EXIT_USAGE));
    // config: missing flag, missing file, bad content
    assert_eq!(freedyn(&["reduce", "a"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(freedyn(&["--config", "/nonexistent.toml", "reduce"]).status.code(), Some(EXIT_CONFIG));
    let bad = write_config(out.path(), "bad.toml", &SMALL.replace("b' a\" }", "a b'\" }"));
    let o = freedyn(&["--config", &bad, "reduce", "a"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(stderr(&o).contains("automorphisms.phi"), "{}", stderr(&o));
    // malformed input word
    assert_eq!(freedyn(&["--config", &fib(), "--out", dir, "reduce", "a c"]).status.code(), Some(EXIT_INPUT));
    // resource
    let o = freedyn(&["--config", &fib(), "--out", dir, "--max-word-letters", "50", "ns-orbit"]);
    assert_eq!(o.status.code(), Some(EXIT_RESOURCE));
    // unsupported: the uniform current cannot be paired with a non-trivially marked rose
    let text = format!(
        "{SMALL}\n[experiments.pair]\ncurrents = [{{ kind = \"uniform\" }}]\ntrees = [{{ lengths = [1, 1], marking = \"phi\" }}]\n"
    );
    let cfg = write_config(out.path(), "unsupported.toml", &text);
    assert_eq!(freedyn(&["--config", &cfg, "--out", dir, "pair"]).status.code(), Some(EXIT_UNSUPPORTED));
}

#[test]
fn convergence_failure_still_writes_the_partial_report() {
    let out = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[experiments.fixed_points]", "[budgets]\niterations = 3\n\n[experiments.fixed_points]");
    let cfg = write_config(out.path(), "short.toml", &text);
    let o = freedyn(&["--config", &cfg, "--out", out.path().to_str().unwrap(), "fixed-points"]);
    assert_eq!(o.status.code(), Some(EXIT_CONVERGENCE), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("fixed-points.json")).unwrap()).unwrap();
    assert_eq!(report["complete"], false);
    assert_eq!(report["orbits"].as_array().unwrap().len(), 4);
    assert_eq!(report["orbits"][0]["orbit"]["converged"], false);
}

#[test]
fn fixed_point_documents_round_trip() {
    let out = tempfile::tempdir().unwrap();
    let o = freedyn(&["--config", &fib(), "--out", out.path().to_str().unwrap(), "fixed-points"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for side in ["plus", "minus"] {
        let text = fs::read_to_string(out.path().join(format!("fixed-points-current-{side}.json"))).unwrap();
        assert_eq!(current_to_json(&current_from_json(&text).unwrap()) + "\n", text);
        let text = fs::read_to_string(out.path().join(format!("fixed-points-tree-{side}.json"))).unwrap();
        assert_eq!(tree_to_json(&tree_from_json(&text).unwrap()) + "\n", text);
    }
}

#[test]
fn json_config_is_equivalent() {
    let out = tempfile::tempdir().unwrap();
    let json = r#"{"version": 1, "context": {"basis": ["a", "b"]}, "depth": 2,
        "experiments": {"weights": {"words": ["a b'"]}}}"#;
    let cfg = write_config(out.path(), "c.json", json);
    let toml = write_config(out.path(), "c.toml", "version = 1\ndepth = 2\n[context]\nbasis = [\"a\", \"b\"]\n[experiments.weights]\nwords = [\"a b'\"]\n");
    let a = out.path().join("a");
    let b = out.path().join("b");
    assert!(freedyn(&["--config", &cfg, "--out", a.to_str().unwrap(), "weights"]).status.success());
    assert!(freedyn(&["--config", &toml, "--out", b.to_str().unwrap(), "weights"]).status.success());
    assert_eq!(fs::read(a.join("weights.json")).unwrap(), fs::read(b.join("weights.json")).unwrap());
}

#[test]
fn validate_flags_inconsistent_assertions() {
    let out = tempfile::tempdir().unwrap();
    let cfg = write_config(out.path(), "v.toml", &SMALL.replace("assert_atoroidal = false", "assert_atoroidal = true"));
    let o = freedyn(&["--config", &cfg, "validate"]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(stdout(&o).contains("automorphisms.phi.assert_atoroidal"), "{}", stdout(&o));
    let warn = write_config(out.path(), "w.toml", &SMALL.replace("assert_iwip = true", "assert_iwip = false"));
    let o = freedyn(&["--config", &warn, "--seed-rng", "7", "validate"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("warning at `experiments.fixed_points.automorphism`"), "{}", stdout(&o));
    assert!(stdout(&o).contains("seed 7"));
    // validate writes nothing
    assert_eq!(fs::read_dir(out.path()).unwrap().count(), 2);
}

#[test]
fn shipped_configs_validate() {
    for name in ["fibonacci.toml", "plastic.toml", "schottky.toml"] {
        let o = freedyn(&["--config", common::config_path(name).to_str().unwrap(), "validate"]);
        assert!(o.status.success(), "{name}: {}", stdout(&o));
    }
}
