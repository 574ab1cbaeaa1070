use std::collections::BTreeSet;
use std::path::Path;

fn book_src() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../book/src"))
}

fn summary_chapters() -> BTreeSet<String> {
    let summary = std::fs::read_to_string(book_src().join("SUMMARY.md")).unwrap();
    summary
        .lines()
        .filter_map(|l| l.split_once("](").map(|(_, rest)| rest.trim_end_matches(')').to_string()))
        .collect()
}

#[test]
fn summary_lists_every_chapter() {
    let files: BTreeSet<String> = std::fs::read_dir(book_src())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f.ends_with(".md") && f != "SUMMARY.md")
        .collect();
    assert_eq!(summary_chapters(), files);
}

#[test]
fn every_chapter_is_doctested() {
    let lib = include_str!("../src/lib.rs");
    for chapter in summary_chapters() {
        let include = format!("include_str!(\"../../../book/src/{chapter}\")");
        assert!(lib.contains(&include), "{chapter} is not included in lib.rs");
    }
}

#[test]
fn chapters_have_runnable_examples() {
    for chapter in summary_chapters() {
        let text = std::fs::read_to_string(book_src().join(&chapter)).unwrap();
        assert!(text.contains("```rust\n"), "{chapter} has no rust example");
    }
}
