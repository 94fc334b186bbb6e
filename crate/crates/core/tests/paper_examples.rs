use std::path::PathBuf;

use arctext::{
    diff_descriptions, export_dot, lint_shapes, load_graph_file, parse_description,
    render_description, save_graph_file, validate_graph, Description, DiffEntry, ShapeStatus,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

#[test]
fn resnet4_renders_table_text() {
    let g = load_graph_file(fixture("resnet4.json")).unwrap();
    assert_eq!(g.len(), 13);
    assert!(validate_graph(&g).is_empty());
    assert_eq!(render_description(&g).unwrap().text, text("resnet4.txt"));
}

#[test]
fn first_example_renders_one_of_the_tie_variants() {
    let g = load_graph_file(fixture("googlenet_fragment.json")).unwrap();
    assert_eq!(g.len(), 25);
    let out = render_description(&g).unwrap().text;
    let a = text("googlenet_fragment.txt");
    let b = text("googlenet_fragment_swapped.txt");
    assert!(out == a || out == b, "unexpected description:\n{out}");
}

#[test]
fn fixtures_lint_clean() {
    for f in ["resnet4.json", "googlenet_fragment.json"] {
        let r = lint_shapes(&load_graph_file(fixture(f)).unwrap());
        assert!(r.is_clean(), "{f}: {:?}", r.to_diagnostics());
        assert!(r.entries.iter().all(|e| e.status != ShapeStatus::Mismatch));
    }
}

#[test]
fn expected_texts_parse_back_to_the_fixture_graphs() {
    for (json, txt) in [
        ("resnet4.json", "resnet4.txt"),
        ("googlenet_fragment.json", "googlenet_fragment.txt"),
        ("googlenet_fragment.json", "googlenet_fragment_swapped.txt"),
    ] {
        let g = load_graph_file(fixture(json)).unwrap();
        let (parsed, _) = parse_description(&text(txt)).unwrap();
        assert_eq!(parsed.len(), g.len());
        assert_eq!(parsed.edges().count(), g.edges().count());
        assert_eq!(
            render_description(&parsed).unwrap().text,
            render_description(&g).unwrap().text
        );
    }
}

#[test]
fn graph_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["resnet4.json", "googlenet_fragment.json"] {
        let g = load_graph_file(fixture(f)).unwrap();
        let out = dir.path().join(f);
        save_graph_file(&g, &out, None).unwrap();
        assert_eq!(load_graph_file(&out).unwrap(), g);
    }
}

#[test]
fn dot_counts() {
    let g = load_graph_file(fixture("resnet4.json")).unwrap();
    let (parsed, order) = parse_description(&text("resnet4.txt")).unwrap();
    let dot = export_dot(&parsed, &order);
    assert_eq!(dot.matches("[label=").count(), 13);
    // the connect_to columns list 13 connections, including the C to J skip
    assert_eq!(dot.matches(" -> ").count(), 13);
    assert!(dot.contains("u4 -> u10;"));
    assert_eq!(g.edges().count(), 13);

    let (fig, order) = parse_description(&text("googlenet_fragment.txt")).unwrap();
    let dot = export_dot(&fig, &order);
    assert_eq!(dot.matches("[label=").count(), 25);
    assert_eq!(dot.matches(" -> u10;").count(), 4);
}

#[test]
fn diffs_between_fixtures() {
    let res = Description::parse(&text("resnet4.txt")).unwrap();
    let fig = Description::parse(&text("googlenet_fragment.txt")).unwrap();
    assert!(diff_descriptions(&res, &res).is_empty());

    let perturbed = text("resnet4.txt").replace("out_size:1000", "out_size:512");
    let perturbed = Description::parse(&perturbed).unwrap();
    let d = diff_descriptions(&res, &perturbed);
    assert_eq!(
        d.entries,
        [DiffEntry::FieldChanged {
            id: 13,
            key: "out_size",
            left: Some("1000".into()),
            right: Some("512".into()),
        }]
    );

    let d = diff_descriptions(&fig, &res);
    assert_eq!((d.left_len, d.right_len), (25, 13));
    assert!(d.to_string().starts_with("25 vs 13 lines"));
}
