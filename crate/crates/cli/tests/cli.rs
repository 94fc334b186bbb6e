use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use arctext::testgen::braid;
use arctext::{graph_file_string, parse_description, render_description, sha224_hex, Vocabulary};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_arctext"));
    cmd.args(args).env_remove("ARCTEXT_MAX_PATHS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn arctext(args: &[&str]) -> Output {
    run(args, &[])
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(arctext(&[]).status.code(), Some(2));
    assert_eq!(arctext(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(arctext(&["canonicalize"]).status.code(), Some(2));
    assert_eq!(
        arctext(&["digest", "-i", "x", "--max-paths", "many"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_and_malformed_inputs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = arctext(&["canonicalize", "-i", s(&dir.path().join("nope.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("FileNotFound"));

    let dense = dir.path().join("dense.json");
    std::fs::write(
        &dense,
        r#"{"nodes":[{"name":"X","kind":"dense","in_size":4,"out_size":4}],"edges":[]}"#,
    )
    .unwrap();
    let out = arctext(&["canonicalize", "-i", s(&dense)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("SchemaError"));
    assert!(stderr(&out).contains("\"X\""));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"nodes\": [,\n").unwrap();
    let out = arctext(&["canonicalize", "-i", s(&broken)]);
    assert!(stderr(&out).contains("SyntaxError"));
    assert!(stderr(&out).contains("line 2"));
}

#[test]
fn empty_graph_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"nodes":[],"edges":[]}"#).unwrap();
    let out = arctext(&["validate", "-i", s(&empty)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("NoNodes"));
}

#[test]
fn output_files_and_idempotence() {
    let dir = tempfile::tempdir().unwrap();
    let txt = dir.path().join("r.txt");
    let input = fixture("resnet4.json");
    for _ in 0..2 {
        let out = arctext(&["canonicalize", "-i", s(&input), "-o", s(&txt)]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        assert_eq!(
            std::fs::read_to_string(&txt).unwrap(),
            std::fs::read_to_string(fixture("resnet4.txt")).unwrap()
        );
    }
    let unwritable = dir.path().join("missing-dir").join("out.txt");
    let out = arctext(&["canonicalize", "-i", s(&input), "-o", s(&unwritable)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("IoError"));
}

#[test]
fn parse_writes_a_loadable_graph_file() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("g.json");
    let out = arctext(&[
        "parse",
        "-i",
        s(&fixture("googlenet_fragment.txt")),
        "-o",
        s(&json),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (g, order) =
        parse_description(&std::fs::read_to_string(fixture("googlenet_fragment.txt")).unwrap())
            .unwrap();
    assert_eq!(
        std::fs::read_to_string(&json).unwrap(),
        graph_file_string(&g, Some(&order))
    );

    let back = arctext(&["canonicalize", "-i", s(&json)]);
    assert_eq!(stdout(&back), render_description(&g).unwrap().text);
}

#[test]
fn validate_detects_both_formats() {
    for f in ["resnet4.json", "resnet4.txt", "googlenet_fragment.txt"] {
        let out = arctext(&["validate", "-i", s(&fixture(f))]);
        assert!(out.status.success(), "{f}: {}", stderr(&out));
        assert!(!stderr(&out).contains("warning"), "{f}: {}", stderr(&out));
    }
    // Same graph, numbered differently from the canonical choice.
    let out = arctext(&[
        "validate",
        "-i",
        s(&fixture("googlenet_fragment_swapped.txt")),
    ]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("NonCanonical"));
    let quiet = arctext(&[
        "--quiet",
        "validate",
        "-i",
        s(&fixture("googlenet_fragment_swapped.txt")),
    ]);
    assert!(quiet.status.success());
    assert!(quiet.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "id:1;bogus:3;connect_to:Null").unwrap();
    let out = arctext(&["validate", "-i", s(&junk)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UnclassifiableLine"));
}

#[test]
fn digest_matches_library() {
    let text = std::fs::read_to_string(fixture("resnet4.txt")).unwrap();
    let out = arctext(&["digest", "-i", s(&fixture("resnet4.txt"))]);
    assert_eq!(stdout(&out), format!("{}\n", sha224_hex(text.as_bytes())));
    assert_eq!(
        stdout(&arctext(&["digest", "-i", s(&fixture("resnet4.txt"))])),
        stdout(&out)
    );
}

#[test]
fn diff_reports_changes() {
    let out = arctext(&[
        "diff",
        s(&fixture("resnet4.txt")),
        s(&fixture("resnet4.txt")),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());

    let out = arctext(&[
        "diff",
        s(&fixture("googlenet_fragment.txt")),
        s(&fixture("resnet4.txt")),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("25 vs 13 lines"));
}

#[test]
fn dot_output() {
    let out = arctext(&["dot", "-i", s(&fixture("googlenet_fragment.json"))]);
    let dot = stdout(&out);
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("[label=").count(), 25);
    assert_eq!(dot.matches(" -> ").count(), 27);
}

#[test]
fn path_cap_from_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("braid.json");
    std::fs::write(&path, graph_file_string(&braid(5), None)).unwrap();

    assert!(arctext(&["canonicalize", "-i", s(&path)]).status.success());
    let capped = arctext(&["canonicalize", "-i", s(&path), "--max-paths", "8"]);
    assert_eq!(capped.status.code(), Some(1));
    assert!(stderr(&capped).contains("PathExplosion"));
    let env = run(
        &["canonicalize", "-i", s(&path)],
        &[("ARCTEXT_MAX_PATHS", "8")],
    );
    assert_eq!(env.status.code(), Some(1));
    let flag_wins = run(
        &["canonicalize", "-i", s(&path), "--max-paths", "1000"],
        &[("ARCTEXT_MAX_PATHS", "8")],
    );
    assert!(flag_wins.status.success());
}

#[test]
fn vectorize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture("resnet4.txt");
    let csv = stdout(&arctext(&["vectorize", "-i", s(&input)]));
    assert_eq!(csv.lines().count(), 14);
    assert!(csv.lines().all(|l| l.split(',').count() == 24));

    let vocab = dir.path().join("vocab.json");
    let out = arctext(&[
        "vectorize",
        "-i",
        s(&input),
        "--tokens",
        "--save-vocab",
        s(&vocab),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 13);
    let saved = Vocabulary::from_json(&std::fs::read_to_string(&vocab).unwrap()).unwrap();
    assert!(!saved.is_closed());

    let mut closed = Vocabulary::default();
    closed.set_closed(true);
    std::fs::write(&vocab, closed.to_json()).unwrap();
    let swish = dir.path().join("swish.txt");
    std::fs::write(
        &swish,
        "id:1;name:Swish;in_size:4;out_size:4;value:Null;connect_to:Null",
    )
    .unwrap();
    let out = arctext(&[
        "vectorize",
        "-i",
        s(&swish),
        "--tokens",
        "--vocab",
        s(&vocab),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("UnknownToken"));
}
