//! Label and relation normalization shared by the parser and the graph.

/// Strips bold markup, trims, and collapses internal whitespace runs.
///
/// Casing is preserved; this is the display form of a concept label.
pub fn clean_label(raw: &str) -> String {
    let unmarked = raw.replace("**", "");
    let unmarked = unmarked.trim_matches(|c: char| c.is_whitespace() || c == '*' || c == '_');
    unmarked.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-folded comparison key for a label.
pub fn label_key(raw: &str) -> String {
    clean_label(raw).to_lowercase()
}

/// Canonical relation label: trimmed, uppercased, with internal spaces and
/// underscores mapped to hyphens (`relates to` -> `RELATES-TO`).
pub fn canonical_relation(raw: &str) -> String {
    let cleaned = clean_label(raw);
    let mut out = String::with_capacity(cleaned.len());
    let mut pending_sep = false;
    for c in cleaned.chars() {
        if c.is_whitespace() || c == '_' || c == '-' {
            pending_sep = !out.is_empty();
            continue;
        }
        if pending_sep {
            out.push('-');
            pending_sep = false;
        }
        out.extend(c.to_uppercase());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_bold_and_collapses() {
        assert_eq!(clean_label("  **Audio   Signal** "), "Audio Signal");
        assert_eq!(label_key("**Music**"), "music");
        assert_eq!(label_key("music"), label_key("MUSIC"));
    }

    #[test]
    fn relation_variants_share_canon() {
        assert_eq!(canonical_relation("RELATES-TO"), "RELATES-TO");
        assert_eq!(canonical_relation(" relates to "), "RELATES-TO");
        assert_eq!(canonical_relation("relates_to"), "RELATES-TO");
        assert_eq!(canonical_relation("is - a"), "IS-A");
        assert_eq!(canonical_relation("influences"), "INFLUENCES");
    }
}
