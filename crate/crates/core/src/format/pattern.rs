//! Symbolic abstract patterns: Greek-letter states joined by `→`, `∝`, `≠`
//! and `If … then …` rules.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::sections::heading_title;
use super::{Diagnostic, Parsed};
use crate::label::clean_label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(rename = "ARROW")]
    Arrow,
    #[serde(rename = "PROPORTIONAL")]
    Proportional,
    #[serde(rename = "NOT-EQUAL")]
    NotEqual,
}

impl RelationKind {
    pub fn glyph(self) -> char {
        match self {
            RelationKind::Arrow => '→',
            RelationKind::Proportional => '∝',
            RelationKind::NotEqual => '≠',
        }
    }

    fn from_glyph(c: char) -> Option<Self> {
        match c {
            '→' => Some(RelationKind::Arrow),
            '∝' => Some(RelationKind::Proportional),
            '≠' => Some(RelationKind::NotEqual),
            _ => None,
        }
    }

    pub fn is_symmetric(self) -> bool {
        self == RelationKind::NotEqual
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternState {
    pub symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRelation {
    pub kind: RelationKind,
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
    /// Antecedents of an `If … then …` rule; empty for plain relations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditional: Vec<PatternRelation>,
}

impl PatternRelation {
    pub fn new(kind: RelationKind, lhs: &str, rhs: &str) -> Self {
        Self {
            kind,
            lhs: vec![canonical_symbol(lhs)],
            rhs: vec![canonical_symbol(rhs)],
            conditional: Vec::new(),
        }
    }

    pub fn is_conditional(&self) -> bool {
        !self.conditional.is_empty()
    }

    fn symbols(&self) -> impl Iterator<Item = &String> {
        self.conditional
            .iter()
            .flat_map(|c| c.lhs.iter().chain(c.rhs.iter()))
            .chain(self.lhs.iter())
            .chain(self.rhs.iter())
    }
}

fn write_side(f: &mut fmt::Formatter<'_>, side: &[String]) -> fmt::Result {
    if side.len() == 1 {
        write!(f, "{}", side[0])
    } else {
        write!(f, "({})", side.join(", "))
    }
}

impl fmt::Display for PatternRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_conditional() {
            write!(f, "If ")?;
            for (i, c) in self.conditional.iter().enumerate() {
                if i > 0 {
                    write!(f, " and ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, " then ")?;
        }
        write_side(f, &self.lhs)?;
        write!(f, " {} ", self.kind.glyph())?;
        write_side(f, &self.rhs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractPattern {
    /// Ordered by symbol (Greek alphabetical order).
    pub states: Vec<PatternState>,
    pub relations: Vec<PatternRelation>,
    #[serde(default)]
    pub context: String,
}

impl AbstractPattern {
    pub fn state(&self, symbol: &str) -> Option<&PatternState> {
        let symbol = canonical_symbol(symbol);
        self.states.iter().find(|s| s.symbol == symbol)
    }

    /// Symbols that were referenced but never given a binding.
    pub fn unbound_symbols(&self) -> Vec<&str> {
        self.states
            .iter()
            .filter(|s| s.binding.is_none())
            .map(|s| s.symbol.as_str())
            .collect()
    }

    pub fn count(&self, kind: RelationKind, conditional: bool) -> usize {
        self.relations
            .iter()
            .filter(|r| r.kind == kind && r.is_conditional() == conditional)
            .count()
    }

    /// Rebuilds `states` so that every referenced symbol is declared.
    fn declare_states(&mut self, bindings: &BTreeMap<String, String>) {
        let mut symbols: BTreeMap<String, Option<String>> = BTreeMap::new();
        for rel in &self.relations {
            for s in rel.symbols() {
                symbols.entry(s.clone()).or_default();
            }
        }
        for (symbol, label) in bindings {
            symbols.insert(symbol.clone(), Some(label.clone()));
        }
        self.states = symbols
            .into_iter()
            .map(|(symbol, binding)| PatternState { symbol, binding })
            .collect();
    }

    /// Builds a pattern from relations and bindings, declaring every symbol.
    pub fn from_parts(
        relations: Vec<PatternRelation>,
        bindings: impl IntoIterator<Item = (String, String)>,
        context: impl Into<String>,
    ) -> Self {
        let bindings: BTreeMap<String, String> = bindings
            .into_iter()
            .map(|(s, l)| (canonical_symbol(&s), clean_label(&l)))
            .collect();
        let mut pattern = Self { states: Vec::new(), relations, context: context.into() };
        pattern.declare_states(&bindings);
        pattern
    }
}

static TEX_MACRO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\\([A-Za-z]+)").unwrap());
static BINDING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(\p{Greek}[0-9'′]*)\s+(?:represents|denotes|stands for)\s+(\*\*[^*]+\*\*|[^,.;]+)",
    )
    .unwrap()
});
static ENUMERATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:\d+[.)]|[-*•+])\s+").unwrap());
static CONDITIONAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^if\s+(.+?),?\s+then\s+(.+)$").unwrap());
static ANTECEDENT_SPLIT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\s+and\s+|\s*;\s*").unwrap());
static CONTEXT_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\**pattern context\**\s*:\**\s*(.*)$").unwrap());

fn tex_macro(name: &str) -> Option<&'static str> {
    Some(match name {
        "alpha" => "α",
        "beta" => "β",
        "gamma" => "γ",
        "delta" => "δ",
        "epsilon" | "varepsilon" => "ε",
        "zeta" => "ζ",
        "eta" => "η",
        "theta" | "vartheta" => "θ",
        "iota" => "ι",
        "kappa" => "κ",
        "lambda" => "λ",
        "mu" => "μ",
        "nu" => "ν",
        "xi" => "ξ",
        "pi" => "π",
        "rho" => "ρ",
        "sigma" => "σ",
        "tau" => "τ",
        "upsilon" => "υ",
        "phi" | "varphi" => "φ",
        "chi" => "χ",
        "psi" => "ψ",
        "omega" => "ω",
        "rightarrow" | "to" | "longrightarrow" => "→",
        "propto" => "∝",
        "neq" | "ne" => "≠",
        _ => return None,
    })
}

/// Maps glyph variants to one symbol (`ϵ` is `ε`, `ϕ` is `φ`, `ϑ` is `θ`).
pub fn canonical_symbol(symbol: &str) -> String {
    symbol
        .trim()
        .chars()
        .map(|c| match c {
            'ϵ' => 'ε',
            'ϕ' => 'φ',
            'ϑ' => 'θ',
            other => other,
        })
        .collect()
}

/// Rewrites TeX math (`$\alpha \rightarrow \beta$`) and ASCII operators into
/// the Unicode glyph form the relation grammar reads.
pub(crate) fn normalize_math(line: &str) -> String {
    let replaced = TEX_MACRO.replace_all(line, |caps: &regex::Captures<'_>| {
        tex_macro(&caps[1]).map(str::to_string).unwrap_or_else(|| caps[0].to_string())
    });
    canonical_symbol(&replaced.replace('$', "").replace("->", "→").replace("!=", "≠"))
}

#[derive(Debug, PartialEq)]
enum Token {
    Symbol(String),
    Op(RelationKind),
    Open,
    Close,
    Comma,
}

fn is_greek(c: char) -> bool {
    matches!(c, 'α'..='ω' | 'Α'..='Ω')
}

fn tokenize(expr: &str) -> Option<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = expr.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '(' => tokens.push(Token::Open),
            ')' => tokens.push(Token::Close),
            ',' | '+' => tokens.push(Token::Comma),
            c if is_greek(c) => {
                let mut symbol = c.to_string();
                while let Some(&next) = chars.peek() {
                    if next.is_ascii_digit() || next == '\'' || next == '′' {
                        symbol.push(next);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Symbol(symbol));
            }
            c => tokens.push(Token::Op(RelationKind::from_glyph(c)?)),
        }
    }
    Some(tokens)
}

fn parse_side(tokens: &[Token], pos: &mut usize) -> Option<Vec<String>> {
    match tokens.get(*pos)? {
        Token::Symbol(s) => {
            *pos += 1;
            let mut side = vec![s.clone()];
            while let (Some(Token::Comma), Some(Token::Symbol(next))) =
                (tokens.get(*pos), tokens.get(*pos + 1))
            {
                side.push(next.clone());
                *pos += 2;
            }
            Some(side)
        }
        Token::Open => {
            *pos += 1;
            let mut side = Vec::new();
            loop {
                match tokens.get(*pos)? {
                    Token::Symbol(s) => side.push(s.clone()),
                    _ => return None,
                }
                *pos += 1;
                match tokens.get(*pos)? {
                    Token::Comma => *pos += 1,
                    Token::Close => {
                        *pos += 1;
                        return Some(side);
                    }
                    _ => return None,
                }
            }
        }
        _ => None,
    }
}

/// Parses `side (op side)+` into pairwise relations; `None` unless the whole
/// expression matches.
fn parse_chain(expr: &str) -> Option<Vec<PatternRelation>> {
    let tokens = tokenize(expr)?;
    let mut pos = 0;
    let mut lhs = parse_side(&tokens, &mut pos)?;
    let mut relations = Vec::new();
    while pos < tokens.len() {
        let kind = match tokens.get(pos)? {
            Token::Op(kind) => *kind,
            _ => return None,
        };
        pos += 1;
        let rhs = parse_side(&tokens, &mut pos)?;
        relations.push(PatternRelation { kind, lhs, rhs: rhs.clone(), conditional: Vec::new() });
        lhs = rhs;
    }
    (!relations.is_empty()).then_some(relations)
}

/// Relation expression at the start of a line, ignoring a trailing
/// `: explanation` clause.
fn parse_relation_line(line: &str) -> Option<Vec<PatternRelation>> {
    if let Some(chain) = parse_chain(line) {
        return Some(chain);
    }
    let (head, _) = line.split_once(':')?;
    parse_chain(head)
}

fn parse_conditional(line: &str) -> Option<PatternRelation> {
    let caps = CONDITIONAL.captures(line.trim())?;
    let mut antecedents = Vec::new();
    for part in ANTECEDENT_SPLIT.split(caps[1].trim_end_matches(',')) {
        let part = part.trim().trim_end_matches(',');
        if part.is_empty() {
            continue;
        }
        antecedents.extend(parse_chain(part)?);
    }
    let consequent = parse_relation_line(caps[2].trim())?;
    if antecedents.is_empty() || consequent.len() != 1 {
        return None;
    }
    let mut relation = consequent.into_iter().next()?;
    relation.conditional = antecedents;
    Some(relation)
}

/// Parses the body of an abstract-pattern section (including its
/// `Key Transformation Rule` / `Essential Condition` / `Explanation`
/// sub-sections and the `Pattern Context:` paragraph).
pub fn parse_pattern_block(block_text: &str) -> Parsed<AbstractPattern> {
    let mut relations = Vec::new();
    let mut bindings: BTreeMap<String, String> = BTreeMap::new();
    let mut context: Vec<&str> = Vec::new();
    let mut in_context = false;
    let mut diagnostics = Vec::new();

    for (idx, raw) in block_text.lines().enumerate() {
        if raw.trim().is_empty() {
            if in_context && !context.is_empty() {
                context.push("");
            }
            continue;
        }
        if let Some(title) = heading_title(raw) {
            in_context = title.eq_ignore_ascii_case("pattern context");
            continue;
        }
        if let Some(caps) = CONTEXT_LINE.captures(raw.trim()).filter(|_| !in_context) {
            in_context = true;
            let rest = caps.get(1).map_or("", |m| m.as_str()).trim();
            // a heading after the marker would become its own line on output
            if let Some(title) = heading_title(rest) {
                in_context = title.eq_ignore_ascii_case("pattern context");
            } else if !rest.is_empty() {
                context.push(rest);
            }
            continue;
        }
        if in_context {
            context.push(raw.trim_end());
            continue;
        }

        let line = normalize_math(&ENUMERATION.replace(raw, ""));
        let line = line.trim();
        if let Some(rel) = parse_conditional(line) {
            relations.push(rel);
            continue;
        }
        if let Some(chain) = parse_relation_line(line) {
            relations.extend(chain);
            continue;
        }
        let mut bound = false;
        for caps in BINDING.captures_iter(line) {
            let label = clean_label(&caps[2]);
            if !label.is_empty() {
                bindings.entry(canonical_symbol(&caps[1])).or_insert(label);
                bound = true;
            }
        }
        if !bound {
            diagnostics.push(Diagnostic::new(idx + 1, raw, "no pattern grammar matched"));
        }
    }

    while context.last() == Some(&"") {
        context.pop();
    }
    let pattern = AbstractPattern::from_parts(relations, bindings, context.join("\n"));
    Parsed { value: pattern, diagnostics }
}

/// Canonical rendering. Headings are not included; the caller emits the
/// `**Abstract Pattern:**` heading.
pub fn render_pattern_block(pattern: &AbstractPattern) -> String {
    let mut out = String::new();
    for rel in &pattern.relations {
        out.push_str(&rel.to_string());
        out.push('\n');
    }
    let bound: Vec<_> = pattern
        .states
        .iter()
        .filter_map(|s| s.binding.as_ref().map(|b| (s, b)))
        .collect();
    if !bound.is_empty() {
        out.push_str("\n**Explanation:**\n\n");
        for (state, binding) in bound {
            out.push_str(&format!("- {} represents **{}**\n", state.symbol, binding));
        }
    }
    if !pattern.context.is_empty() {
        out.push_str("\nPattern Context:\n");
        out.push_str(&pattern.context);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_expands_pairwise() {
        let p = parse_pattern_block("α → β → γ").value;
        let symbols: Vec<_> = p.states.iter().map(|s| s.symbol.as_str()).collect();
        assert_eq!(symbols, ["α", "β", "γ"]);
        assert_eq!(
            p.relations,
            vec![
                PatternRelation::new(RelationKind::Arrow, "α", "β"),
                PatternRelation::new(RelationKind::Arrow, "β", "γ"),
            ]
        );
    }

    #[test]
    fn conditional_rule_keeps_antecedents() {
        let p = parse_pattern_block("If α → δ and β → δ then δ → ε").value;
        assert_eq!(p.relations.len(), 1);
        let rule = &p.relations[0];
        assert_eq!(rule.lhs, ["δ"]);
        assert_eq!(rule.rhs, ["ε"]);
        assert_eq!(rule.conditional.len(), 2);
        assert_eq!(rule.conditional[1], PatternRelation::new(RelationKind::Arrow, "β", "δ"));
    }

    #[test]
    fn not_equal_and_proportional() {
        let p = parse_pattern_block("α ≠ β\nα ∝ ε").value;
        assert_eq!(p.count(RelationKind::NotEqual, false), 1);
        assert_eq!(p.count(RelationKind::Proportional, false), 1);
        assert!(p.relations[0].kind.is_symmetric());
    }

    #[test]
    fn tex_math_and_epsilon_variants() {
        let p = parse_pattern_block("$\\alpha \\rightarrow \\varepsilon$\n$\\beta \\to ϵ$").value;
        assert_eq!(p.states.len(), 3);
        assert!(p.state("ϵ").is_some());
        assert_eq!(p.relations[1].rhs, ["ε"]);
    }

    #[test]
    fn bindings_from_explanation() {
        let text = "α → β\n\n**Explanation:**\n\n- α represents **Music**, β represents **Material**, and more.\n- The pattern α → β shows a link.";
        let parsed = parse_pattern_block(text);
        let p = parsed.value;
        assert_eq!(p.relations.len(), 1);
        assert_eq!(p.state("α").unwrap().binding.as_deref(), Some("Music"));
        assert_eq!(p.state("β").unwrap().binding.as_deref(), Some("Material"));
        assert_eq!(parsed.diagnostics.len(), 1);
    }

    #[test]
    fn relation_with_trailing_explanation() {
        let p = parse_pattern_block("α → β : OKN enables fabrication (β)").value;
        assert_eq!(p.relations, vec![PatternRelation::new(RelationKind::Arrow, "α", "β")]);
    }

    #[test]
    fn context_paragraph() {
        let text = "α → β\n\nPattern Context:\nFirst line.\nSecond line.\n";
        let p = parse_pattern_block(text).value;
        assert_eq!(p.context, "First line.\nSecond line.");
        let inline = parse_pattern_block("Pattern Context: Inline context.").value;
        assert_eq!(inline.context, "Inline context.");
    }

    #[test]
    fn undeclared_symbols_are_auto_declared_unbound() {
        let p = parse_pattern_block("- α represents **Music**\nα → ζ").value;
        assert_eq!(p.unbound_symbols(), ["ζ"]);
    }

    #[test]
    fn grouped_sides() {
        let p = parse_pattern_block("(α, β) → γ").value;
        assert_eq!(p.relations[0].lhs, ["α", "β"]);
        assert_eq!(p.relations[0].to_string(), "(α, β) → γ");
    }

    #[test]
    fn render_then_parse_is_identity() {
        let p = parse_pattern_block(
            "α → β → γ\nIf α → δ and β → δ then δ → ε\nα ≠ β\n- α represents **Music**\nPattern Context: ctx",
        )
        .value;
        let again = parse_pattern_block(&render_pattern_block(&p));
        assert_eq!(again.value, p);
        assert!(again.diagnostics.is_empty());
    }
}
