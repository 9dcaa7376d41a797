use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Diagnostic, Parsed};
use crate::label::{canonical_relation, clean_label};

static ENUMERATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:\d+[.)]|[-*•+])\s+").unwrap());
static ARROW: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-\[\s*([^\]]*?)\s*\]->").unwrap());
static TRAILING_NOTE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(.*?)\s*\(([^()]*)\)\s*$").unwrap());

/// One `subject -[RELATION]-> object` statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Triple {
    pub fn new(subject: &str, relation: &str, object: &str) -> Self {
        Self {
            subject: clean_label(subject),
            relation: canonical_relation(relation),
            object: clean_label(object),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Splits a term into its label and an optional trailing `( ... )` annotation.
fn split_term(term: &str) -> (String, Option<String>) {
    let trimmed = term.trim();
    if let Some(caps) = TRAILING_NOTE.captures(trimmed) {
        let label = clean_label(&caps[1]);
        let note = caps[2].trim();
        if !label.is_empty() {
            return (label, (!note.is_empty()).then(|| note.to_string()));
        }
    }
    (clean_label(trimmed), None)
}

/// Parses a single graph line; `None` when the line carries no arrow.
pub(crate) fn parse_graph_line(line: &str) -> Option<Result<Vec<Triple>, &'static str>> {
    let body = ENUMERATION.replace(line, "");
    let relations: Vec<_> = ARROW.captures_iter(&body).map(|c| c[1].to_string()).collect();
    if relations.is_empty() {
        return None;
    }
    let terms: Vec<(String, Option<String>)> = ARROW.split(&body).map(split_term).collect();
    if terms.iter().any(|(label, _)| label.is_empty()) {
        return Some(Err("empty concept label"));
    }
    let mut triples = Vec::with_capacity(relations.len());
    for (i, rel) in relations.iter().enumerate() {
        let relation = canonical_relation(rel);
        if relation.is_empty() {
            return Some(Err("empty relation label"));
        }
        triples.push(Triple {
            subject: terms[i].0.clone(),
            relation,
            object: terms[i + 1].0.clone(),
            note: None,
        });
    }
    // An annotation belongs to the edge whose object it follows; a note on
    // the leading subject goes to the first edge.
    for (i, (_, note)) in terms.iter().enumerate() {
        if let Some(note) = note {
            let edge = i.saturating_sub(1);
            triples[edge].note.get_or_insert_with(|| note.clone());
        }
    }
    Some(Ok(triples))
}

/// Parses the body of a knowledge-graph section into triples.
///
/// A line with `k` arrows yields `k` consecutive triples. Lines without any
/// arrow or with empty terms are reported as diagnostics and skipped.
pub fn parse_graph_block(block_text: &str) -> Parsed<Vec<Triple>> {
    let mut triples = Vec::new();
    let mut diagnostics = Vec::new();
    for (idx, line) in block_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_graph_line(line) {
            Some(Ok(found)) => triples.extend(found),
            Some(Err(reason)) => diagnostics.push(Diagnostic::new(idx + 1, line, reason)),
            None => diagnostics.push(Diagnostic::new(idx + 1, line, "no relation arrow")),
        }
    }
    Parsed { value: triples, diagnostics }
}

/// Canonical rendering: one numbered `**A** -[R]-> **B**` line per triple.
pub fn render_graph_block(triples: &[Triple]) -> String {
    let mut out = String::new();
    for (i, t) in triples.iter().enumerate() {
        out.push_str(&format!("{}. **{}** -[{}]-> **{}**", i + 1, t.subject, t.relation, t.object));
        if let Some(note) = &t.note {
            out.push_str(&format!(" ({note})"));
        }
        out.push('\n');
    }
    out
}
