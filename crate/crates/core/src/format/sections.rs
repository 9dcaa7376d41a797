use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Heading key for text that precedes the first heading.
pub const UNSECTIONED: &str = "UNSECTIONED";

static BOLD_COLON_OUTSIDE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\*\*([^*\n]+?)\*\*\s*:\s*$").unwrap());
static BOLD_COLON_INSIDE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\*\*([^*\n]+?):\*\*\s*$").unwrap());
static MARKDOWN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s{0,3}#{1,6}\s+(.+?)\s*#*\s*$").unwrap());

/// Returns the heading title if the whole line is a section heading:
/// `**Title**:`, `**Title:**` or a markdown `# Title`.
pub fn heading_title(line: &str) -> Option<String> {
    [&*BOLD_COLON_OUTSIDE, &*BOLD_COLON_INSIDE, &*MARKDOWN]
        .iter()
        .find_map(|re| re.captures(line))
        .map(|caps| caps[1].trim().trim_end_matches(':').trim().to_string())
        .filter(|t| !t.is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub body: String,
}

/// Splits thinking text into headed sections, in order. Text before the
/// first heading lands in an `UNSECTIONED` section; bodies are trimmed.
pub fn split_sections(text: &str) -> Vec<Section> {
    let mut sections = Vec::new();
    let mut heading = UNSECTIONED.to_string();
    let mut body: Vec<&str> = Vec::new();
    let flush = |heading: &str, body: &[&str], sections: &mut Vec<Section>| {
        let joined = body.join("\n");
        let trimmed = joined.trim();
        if heading != UNSECTIONED || !trimmed.is_empty() {
            sections.push(Section { heading: heading.to_string(), body: trimmed.to_string() });
        }
    };
    for line in text.lines() {
        if let Some(title) = heading_title(line) {
            flush(&heading, &body, &mut sections);
            heading = title;
            body.clear();
        } else {
            body.push(line);
        }
    }
    flush(&heading, &body, &mut sections);
    sections
}

/// Heading aliases that select the structured blocks inside a thinking
/// region. Matching is case-insensitive on the trimmed title.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadingAliases {
    pub graph: Vec<String>,
    pub pattern: Vec<String>,
    /// Sub-headings that continue an abstract-pattern block.
    pub pattern_parts: Vec<String>,
}

impl Default for HeadingAliases {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            graph: owned(&["Knowledge Graph", "Core Concepts and Relationships"]),
            pattern: owned(&["Abstract Pattern", "Abstract Patterns"]),
            pattern_parts: owned(&[
                "Key Transformation Rule",
                "Key Transformation Rules",
                "Essential Condition",
                "Essential Conditions",
                "Explanation",
                "Pattern Context",
            ]),
        }
    }
}

fn matches_any(title: &str, aliases: &[String]) -> bool {
    aliases.iter().any(|a| a.eq_ignore_ascii_case(title.trim()))
}

/// Section role under a given alias set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectionRole {
    Graph,
    PatternHead,
    PatternPart,
    Free,
}

impl HeadingAliases {
    /// Classifies each section; pattern parts only count directly after a
    /// pattern head (or another part).
    pub fn classify(&self, sections: &[Section]) -> Vec<SectionRole> {
        let mut roles = Vec::with_capacity(sections.len());
        let mut in_pattern = false;
        for s in sections {
            let role = if matches_any(&s.heading, &self.graph) {
                SectionRole::Graph
            } else if matches_any(&s.heading, &self.pattern) {
                SectionRole::PatternHead
            } else if in_pattern && matches_any(&s.heading, &self.pattern_parts) {
                SectionRole::PatternPart
            } else {
                SectionRole::Free
            };
            in_pattern = matches!(role, SectionRole::PatternHead | SectionRole::PatternPart);
            roles.push(role);
        }
        roles
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_forms() {
        assert_eq!(heading_title("**Knowledge Graph:**").as_deref(), Some("Knowledge Graph"));
        assert_eq!(heading_title("**Reasoning Steps**:").as_deref(), Some("Reasoning Steps"));
        assert_eq!(heading_title("**Abstract Pattern:** ").as_deref(), Some("Abstract Pattern"));
        assert_eq!(heading_title("## Hypothesis").as_deref(), Some("Hypothesis"));
        assert_eq!(heading_title("- **Material Selection**: Choose"), None);
        assert_eq!(heading_title("1. **Music** -[IS-A]-> **Audio Signal**"), None);
        assert_eq!(heading_title("**Proposed Idea**"), None);
    }

    #[test]
    fn split_keeps_order_and_unsectioned() {
        let s = split_sections("intro\n**A**:\none\n\n**B:**\ntwo\n");
        let headings: Vec<_> = s.iter().map(|s| s.heading.as_str()).collect();
        assert_eq!(headings, [UNSECTIONED, "A", "B"]);
        assert_eq!(s[1].body, "one");
    }

    #[test]
    fn pattern_parts_follow_head_only() {
        let s = split_sections("**Explanation:**\nx\n**Abstract Pattern:**\ny\n**Explanation:**\nz");
        let roles = HeadingAliases::default().classify(&s);
        assert_eq!(roles, [SectionRole::Free, SectionRole::PatternHead, SectionRole::PatternPart]);
    }
}
