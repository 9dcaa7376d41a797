//! Parsing the verbatim listings from the music and song examples.

use gpfo_core::format::{
    parse_graph_block, parse_pattern_block, parse_response, serialize_trace, split_sections, PatternRelation,
    RelationKind, Triple,
};
use gpfo_core::graph::{KnowledgeGraph, StepRef, UndirectedView};

const MUSIC_GRAPH: &str = include_str!("fixtures/music_graph_block.txt");
const SONG_GRAPH: &str = include_str!("fixtures/song_graph_block.txt");
const MUSIC_PATTERN: &str = include_str!("fixtures/music_pattern_block.txt");
const SONG_PATTERN: &str = include_str!("fixtures/song_pattern_block.txt");
const SONG_PATTERN_UNICODE: &str = include_str!("fixtures/song_pattern_block_unicode.txt");
const MUSIC_RESPONSE: &str = include_str!("fixtures/music_response.txt");

fn body(block: &str) -> String {
    split_sections(block).into_iter().map(|s| s.body).collect::<Vec<_>>().join("\n")
}

fn t(s: &str, r: &str, o: &str) -> Triple {
    Triple::new(s, r, o)
}

/// Hand enumeration of the music knowledge-graph listing, chains expanded.
fn music_triples() -> Vec<Triple> {
    const MMP: &str = "Material's Mechanical Properties";
    const NDR: &str = "Nonlinear Dynamic Response";
    vec![
        t("Music", "IS-A", "Audio Signal"),
        t("Material", "IS-A", "Physical Substance"),
        t(NDR, "RELATES-TO", "Material"),
        t("Frequency", "RELATES-TO", "Music"),
        t(NDR, "INFLUENCES", MMP),
        t("Music", "INFLUENCES", NDR),
        t(NDR, "INFLUENCES", MMP),
        t("Frequency Spectrum", "RELATES-TO", "Music"),
        t("Frequency Spectrum", "RELATES-TO", MMP),
        t("Material", "INFLUENCES", "Frequency Spectrum"),
        t("Frequency Spectrum", "INFLUENCES", "Music"),
        t("Material Selection", "IS-A", "Material"),
        t("Material", "RELATES-TO", "Music"),
        t("Music", "RELATES-TO", MMP),
    ]
}

#[test]
fn music_graph_block_exact_triples() {
    let parsed = parse_graph_block(&body(MUSIC_GRAPH));
    assert!(parsed.diagnostics.is_empty(), "{:?}", parsed.diagnostics);
    assert_eq!(parsed.value, music_triples());
}

#[test]
fn music_graph_counts() {
    let g = KnowledgeGraph::from_triples(&music_triples(), &StepRef::new("music", 0));
    // 9 distinct concepts; item 6's tail repeats item 5, so 13 distinct edges.
    assert_eq!(g.node_count(), 9);
    assert_eq!(g.edge_count(), 13);
    for label in ["Music", "Material", "Frequency Spectrum"] {
        assert!(g.node_by_label(label).is_some(), "{label}");
    }
    let view = UndirectedView::new(&g);
    let music = view.nodes.iter().position(|n| n.as_str() == "music").unwrap();
    let max = (0..view.len()).map(|v| view.degree(v)).max().unwrap();
    assert_eq!(view.degree(music), 6);
    assert_eq!(max, 6);
}

#[test]
fn song_graph_block_with_notes() {
    let parsed = parse_graph_block(&body(SONG_GRAPH));
    assert!(parsed.diagnostics.is_empty());
    let triples = parsed.value;
    assert_eq!(triples.len(), 10);
    assert_eq!(triples[4], t("Snow Flakes", "INFLUENCES", "Mood").with_note("e.g., Serene, Calming"));
    assert_eq!(triples[5], t("Flower Petals", "INFLUENCES", "Mood").with_note("e.g., Delicate, Whimsical"));
    let g = KnowledgeGraph::from_triples(&triples, &StepRef::new("song", 0));
    assert_eq!((g.node_count(), g.edge_count()), (8, 10));
}

#[test]
fn music_pattern_block() {
    let parsed = parse_pattern_block(MUSIC_PATTERN);
    let p = parsed.value;
    assert_eq!(
        p.relations,
        vec![
            PatternRelation::new(RelationKind::Arrow, "α", "β"),
            PatternRelation::new(RelationKind::Arrow, "β", "γ"),
            PatternRelation::new(RelationKind::Proportional, "α", "β"),
            PatternRelation::new(RelationKind::Arrow, "γ", "α"),
        ]
    );
    assert_eq!(p.state("α").unwrap().binding.as_deref(), Some("Music"));
    assert_eq!(p.state("β").unwrap().binding.as_deref(), Some("Material"));
    assert_eq!(p.state("γ").unwrap().binding.as_deref(), Some("Material's Mechanical Properties"));
    assert!(p.context.starts_with("Inspire a new method to tune"));
    // The three prose explanation bullets carry no grammar.
    assert_eq!(parsed.diagnostics.len(), 3);
}

fn check_song_pattern(text: &str) {
    let p = parse_pattern_block(text).value;
    assert_eq!(p.count(RelationKind::Arrow, false), 8);
    assert_eq!(p.count(RelationKind::Arrow, true), 1);
    assert_eq!(p.count(RelationKind::NotEqual, false), 1);
    assert_eq!(p.relations.len(), 10);
    let rule = p.relations.iter().find(|r| r.is_conditional()).unwrap();
    assert_eq!(rule.to_string(), "If α → δ and β → δ then δ → ε");
    let symbols: Vec<_> = p.states.iter().map(|s| s.symbol.as_str()).collect();
    assert_eq!(symbols, ["α", "β", "γ", "δ", "ε", "ζ"]);
    assert!(p.context.starts_with("The song incorporates snowflakes"));
}

#[test]
fn song_pattern_block_tex_and_unicode() {
    check_song_pattern(SONG_PATTERN);
    check_song_pattern(SONG_PATTERN_UNICODE);
    assert_eq!(parse_pattern_block(SONG_PATTERN).value, parse_pattern_block(SONG_PATTERN_UNICODE).value);
}

#[test]
fn full_music_response() {
    let trace = parse_response(MUSIC_RESPONSE);
    assert!(trace.thinking_present);
    assert!(!trace.has_warning());
    assert_eq!(trace.graph_block, music_triples());
    assert!(trace.pattern.is_some());
    assert!(trace.final_answer.starts_with("**Proposed Idea: \"Music-Inspired Material Tuning\"**"));
    let headings: Vec<_> = trace.structure().free_sections.iter().map(|s| s.heading.as_str()).collect();
    assert_eq!(
        headings,
        [
            "Reasoning Steps",
            "Relevant Materials or Concepts",
            "Design Principles",
            "Material Properties",
            "Hypothesis",
            "Additional Background"
        ]
    );
}

#[test]
fn music_response_round_trip() {
    let first = parse_response(MUSIC_RESPONSE);
    let text = serialize_trace(&first);
    let second = parse_response(&text);
    assert_eq!(second.structure(), first.structure());
    assert_eq!(parse_response(&serialize_trace(&second)).structure(), second.structure());
}
