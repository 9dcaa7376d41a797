//! Structured reasoning text: thinking markers, headed sections, the
//! knowledge-graph block and the abstract-pattern block.
//!
//! The wire format is:
//!
//! ```text
//! <|thinking|>
//! **Knowledge Graph:**
//!
//! 1. **A** -[IS-A]-> **B**
//!
//! **Abstract Pattern:**
//!
//! α → β
//!
//! **Reasoning Steps**:
//!
//! free text
//! <|/thinking|>
//!
//! final answer
//! ```
//!
//! Parsing is total. Anything the grammars do not recognize is kept as raw
//! section text and reported as a [`Diagnostic`].

mod graph_block;
mod pattern;
mod sections;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

pub use graph_block::{parse_graph_block, render_graph_block, Triple};
pub use pattern::{
    canonical_symbol, parse_pattern_block, render_pattern_block, AbstractPattern, PatternRelation,
    PatternState, RelationKind,
};
pub use sections::{heading_title, split_sections, HeadingAliases, Section, SectionRole, UNSECTIONED};

pub const THINKING_OPEN: &str = "<|thinking|>";
pub const THINKING_CLOSE: &str = "<|/thinking|>";

/// A line the grammars could not use.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// 1-based line number within the parsed block.
    pub line: usize,
    pub text: String,
    pub reason: String,
}

impl Diagnostic {
    pub(crate) fn new(line: usize, text: &str, reason: &str) -> Self {
        Self { line, text: text.to_string(), reason: reason.to_string() }
    }
}

/// Parse result plus the lines that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseWarning {
    /// An opening marker without a closing marker.
    MalformedDelimiters,
    /// A closing marker without an opening marker.
    StrayClosingMarker,
    /// More thinking regions after the first; kept as final-answer text.
    ExtraThinkingRegions { count: usize },
    /// Lines skipped by the graph or pattern grammar.
    SkippedLines { section: String, diagnostics: Vec<Diagnostic> },
}

/// One parsed model response.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub thinking_present: bool,
    /// Raw text between the markers, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinking: Option<String>,
    pub sections: Vec<Section>,
    pub graph_block: Vec<Triple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<AbstractPattern>,
    pub final_answer: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<ParseWarning>,
}

/// The parts of a trace that survive serialization: structured blocks,
/// free-text sections and the final answer.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStructure<'a> {
    pub thinking_present: bool,
    pub graph_block: &'a [Triple],
    pub pattern: Option<&'a AbstractPattern>,
    pub free_sections: Vec<&'a Section>,
    pub final_answer: &'a str,
}

impl ReasoningTrace {
    pub fn has_warning(&self) -> bool {
        self.warnings.iter().any(|w| !matches!(w, ParseWarning::SkippedLines { .. }))
    }

    pub fn section(&self, heading: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.heading.eq_ignore_ascii_case(heading))
    }

    pub fn structure(&self) -> TraceStructure<'_> {
        self.structure_with(&HeadingAliases::default())
    }

    pub fn structure_with(&self, aliases: &HeadingAliases) -> TraceStructure<'_> {
        let roles = aliases.classify(&self.sections);
        TraceStructure {
            thinking_present: self.thinking_present,
            graph_block: &self.graph_block,
            pattern: self.pattern.as_ref(),
            free_sections: self
                .sections
                .iter()
                .zip(roles)
                .filter(|(_, r)| *r == SectionRole::Free)
                .map(|(s, _)| s)
                .collect(),
            final_answer: &self.final_answer,
        }
    }
}

/// Parses a raw model response with the default heading aliases.
pub fn parse_response(raw: &str) -> ReasoningTrace {
    parse_response_with(raw, &HeadingAliases::default())
}

pub fn parse_response_with(raw: &str, aliases: &HeadingAliases) -> ReasoningTrace {
    // CR, CRLF and LF all end a line; a bare CR must not hide a heading.
    let raw: Cow<str> = if raw.contains('\r') {
        Cow::Owned(raw.replace("\r\n", "\n").replace('\r', "\n"))
    } else {
        Cow::Borrowed(raw)
    };
    let raw = raw.as_ref();
    let mut trace = ReasoningTrace::default();
    let Some(open) = raw.find(THINKING_OPEN) else {
        if raw.contains(THINKING_CLOSE) {
            trace.warnings.push(ParseWarning::StrayClosingMarker);
        }
        trace.final_answer = raw.trim().to_string();
        return trace;
    };

    let inner_start = open + THINKING_OPEN.len();
    let (thinking, rest) = match raw[inner_start..].find(THINKING_CLOSE) {
        Some(rel) => {
            let close = inner_start + rel;
            (&raw[inner_start..close], &raw[close + THINKING_CLOSE.len()..])
        }
        None => {
            trace.warnings.push(ParseWarning::MalformedDelimiters);
            (&raw[inner_start..], "")
        }
    };
    let extra = rest.matches(THINKING_OPEN).count();
    if extra > 0 {
        trace.warnings.push(ParseWarning::ExtraThinkingRegions { count: extra });
    }

    trace.thinking_present = true;
    trace.thinking = Some(thinking.to_string());
    trace.final_answer = rest.trim().to_string();
    trace.sections = split_sections(thinking);

    let roles = aliases.classify(&trace.sections);
    // Only the first pattern block (head plus its sub-sections) is read.
    let mut pattern_text: Option<String> = None;
    let mut pattern_seen = false;
    for (section, role) in trace.sections.iter().zip(&roles) {
        if !matches!(role, SectionRole::PatternPart) {
            if let Some(text) = pattern_text.take() {
                trace.pattern = Some(read_pattern(&text, &mut trace.warnings));
            }
        }
        match role {
            SectionRole::Graph => {
                let parsed = parse_graph_block(&section.body);
                trace.graph_block.extend(parsed.value);
                if !parsed.diagnostics.is_empty() {
                    trace.warnings.push(ParseWarning::SkippedLines {
                        section: section.heading.clone(),
                        diagnostics: parsed.diagnostics,
                    });
                }
            }
            SectionRole::PatternHead if !pattern_seen => {
                pattern_seen = true;
                pattern_text = Some(section.body.clone());
            }
            SectionRole::PatternPart => {
                if let Some(text) = pattern_text.as_mut() {
                    text.push_str(&format!("\n**{}:**\n{}", section.heading, section.body));
                }
            }
            SectionRole::PatternHead | SectionRole::Free => {}
        }
    }
    if let Some(text) = pattern_text {
        trace.pattern = Some(read_pattern(&text, &mut trace.warnings));
    }
    trace
}

fn read_pattern(text: &str, warnings: &mut Vec<ParseWarning>) -> AbstractPattern {
    let parsed = parse_pattern_block(text);
    if !parsed.diagnostics.is_empty() {
        warnings.push(ParseWarning::SkippedLines {
            section: "Abstract Pattern".to_string(),
            diagnostics: parsed.diagnostics,
        });
    }
    parsed.value
}

/// Emits the canonical text form of a trace.
///
/// Graph and pattern sections are regenerated from the structured fields;
/// every other section body is emitted verbatim.
pub fn serialize_trace(trace: &ReasoningTrace) -> String {
    serialize_trace_with(trace, &HeadingAliases::default())
}

pub fn serialize_trace_with(trace: &ReasoningTrace, aliases: &HeadingAliases) -> String {
    if !trace.thinking_present {
        return trace.final_answer.clone();
    }
    let graph_part = || format!("**Knowledge Graph:**\n\n{}", render_graph_block(&trace.graph_block));
    let pattern_part =
        |p: &AbstractPattern| format!("**Abstract Pattern:**\n\n{}", render_pattern_block(p));
    // Structured sections that are not the first of their kind are kept as
    // empty headings so that section adjacency (and with it the pattern
    // sub-section grouping) is the same on re-parse.
    let placeholder = |s: &Section| format!("**{}:**", s.heading);

    let roles = aliases.classify(&trace.sections);
    let mut parts: Vec<String> = Vec::new();
    let mut graph_done = false;
    let mut pattern_group: Option<bool> = None; // Some(true) while inside the first group
    for (section, role) in trace.sections.iter().zip(&roles) {
        match role {
            SectionRole::Graph if !graph_done => {
                parts.push(graph_part());
                graph_done = true;
            }
            SectionRole::PatternHead if pattern_group.is_none() => {
                if let Some(p) = &trace.pattern {
                    parts.push(pattern_part(p));
                }
                pattern_group = Some(true);
                continue;
            }
            SectionRole::PatternPart if pattern_group == Some(true) => continue,
            SectionRole::Graph | SectionRole::PatternHead | SectionRole::PatternPart => {
                parts.push(placeholder(section));
            }
            SectionRole::Free if section.heading == UNSECTIONED => parts.push(section.body.clone()),
            SectionRole::Free => parts.push(format!("**{}**:\n\n{}", section.heading, section.body)),
        }
        if pattern_group == Some(true) {
            pattern_group = Some(false);
        }
    }

    let mut at = usize::from(trace.sections.first().is_some_and(|s| s.heading == UNSECTIONED));
    if !graph_done && !trace.graph_block.is_empty() {
        parts.insert(at, graph_part());
        at += 1;
    }
    if pattern_group.is_none() {
        if let Some(p) = &trace.pattern {
            let next_is_part = trace.sections.get(at).is_some_and(|s| {
                aliases.pattern_parts.iter().any(|a| a.eq_ignore_ascii_case(&s.heading))
            });
            if next_is_part {
                parts.push(pattern_part(p));
            } else {
                parts.insert(at.min(parts.len()), pattern_part(p));
            }
        }
    }

    let mut out = String::from(THINKING_OPEN);
    out.push('\n');
    for part in parts {
        out.push_str(part.trim_end());
        out.push_str("\n\n");
    }
    out.push_str(THINKING_CLOSE);
    if !trace.final_answer.is_empty() {
        out.push_str("\n\n");
        out.push_str(&trace.final_answer);
    }
    out
}

/// Text of the first thinking region, if any.
pub fn extract_thinking(raw: &str) -> Option<&str> {
    let open = raw.find(THINKING_OPEN)? + THINKING_OPEN.len();
    let close = raw[open..].find(THINKING_CLOSE).map_or(raw.len(), |rel| open + rel);
    Some(raw[open..close].trim())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_markers_is_all_answer() {
        let t = parse_response("Hello.");
        assert!(!t.thinking_present);
        assert_eq!(t.final_answer, "Hello.");
        assert!(t.graph_block.is_empty() && t.pattern.is_none());
    }

    #[test]
    fn unclosed_marker_is_flagged_not_dropped() {
        let t = parse_response("<|thinking|>x");
        assert!(t.thinking_present);
        assert!(t.has_warning());
        assert!(t.warnings.contains(&ParseWarning::MalformedDelimiters));
        assert_eq!(t.final_answer, "");
        assert_eq!(t.sections[0].body, "x");
    }

    #[test]
    fn second_region_stays_in_answer() {
        let t = parse_response("<|thinking|>a<|/thinking|>ans <|thinking|>b<|/thinking|>");
        assert_eq!(t.final_answer, "ans <|thinking|>b<|/thinking|>");
        assert!(t.warnings.contains(&ParseWarning::ExtraThinkingRegions { count: 1 }));
    }

    #[test]
    fn stray_close_marker() {
        let t = parse_response("text <|/thinking|> more");
        assert!(!t.thinking_present);
        assert!(t.warnings.contains(&ParseWarning::StrayClosingMarker));
    }

    #[test]
    fn sections_and_blocks() {
        let raw = "<|thinking|>\n**Knowledge Graph:**\n\n1. **A** -[IS-A]-> **B**\n\n**Abstract Pattern:**\n\nα → β\n\n**Key Transformation Rule:**\n\nα ∝ β\n\n**Reasoning Steps**:\n\n1. step\n<|/thinking|>\n\nDone.";
        let t = parse_response(raw);
        assert_eq!(t.graph_block, vec![Triple::new("A", "IS-A", "B")]);
        let p = t.pattern.as_ref().unwrap();
        assert_eq!(p.relations.len(), 2);
        assert_eq!(t.section("Reasoning Steps").unwrap().body, "1. step");
        assert_eq!(t.final_answer, "Done.");
        assert_eq!(t.structure().free_sections.len(), 1);
    }

    #[test]
    fn serialize_single_triple() {
        let t = ReasoningTrace {
            thinking_present: true,
            graph_block: vec![Triple::new("A", "IS-A", "B")],
            final_answer: "ok".into(),
            ..Default::default()
        };
        let text = serialize_trace(&t);
        assert!(text.contains("1. **A** -[IS-A]-> **B**"));
        assert_eq!(parse_response(&text).structure(), t.structure());
    }

    #[test]
    fn serialize_without_thinking_is_answer_only() {
        let t = ReasoningTrace { final_answer: "just this".into(), ..Default::default() };
        assert_eq!(serialize_trace(&t), "just this");
        assert_eq!(serialize_trace(&ReasoningTrace::default()), "");
    }

    #[test]
    fn extract_first_region() {
        assert_eq!(extract_thinking("pre<|thinking|> x <|/thinking|>y"), Some("x"));
        assert_eq!(extract_thinking("<|thinking|>open"), Some("open"));
        assert_eq!(extract_thinking("none"), None);
    }

    #[test]
    fn reparse_is_stable_on_odd_line_breaks_and_context_markers() {
        for raw in [
            "<|thinking|><|thinking|>\r\r\n1. **A** -[IS-A]-> **B** -[",
            "<|thinking|>**Abstract Pattern:**\nPattern Context:\r**Knowledge Graph:**\n",
            "<|thinking|>**Abstract Pattern:**\n**Knowledge Graph:**\nPattern Context:Pattern Context:",
        ] {
            let t = parse_response(raw);
            assert_eq!(parse_response(&serialize_trace(&t)).structure(), t.structure(), "{raw:?}");
        }
    }
}
