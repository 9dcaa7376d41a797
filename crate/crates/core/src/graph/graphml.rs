//! GraphML 1.0 export and import.
//!
//! Nodes are written as `n0, n1, …` in [`NodeId`] order and edges as
//! `e0, e1, …` in edge-key order. Node data: `display`, `provenance`;
//! edge data: `relation`, `note`, `provenance`. Provenance is a
//! space-separated list of `session#index` references.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Edge, GraphError, KnowledgeGraph, Node, NodeId, Provenance, StepRef};
use crate::label::{canonical_relation, clean_label};

const GRAPHML_NS: &str = "http://graphml.graphdrawing.org/xmlns";

const KEYS: [(&str, &str, &str); 5] = [
    ("d0", "node", "display"),
    ("d1", "node", "provenance"),
    ("d2", "edge", "relation"),
    ("d3", "edge", "note"),
    ("d4", "edge", "provenance"),
];

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\r' => out.push_str("&#13;"),
            '\t' | '\n' => out.push(c),
            // Not representable in XML 1.0.
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

fn provenance_text(p: &Provenance) -> String {
    p.iter().map(StepRef::to_string).collect::<Vec<_>>().join(" ")
}

pub fn to_graphml(g: &KnowledgeGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<graphml xmlns=\"{GRAPHML_NS}\" xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"{GRAPHML_NS} {GRAPHML_NS}/1.0/graphml.xsd\">"
    );
    for (id, domain, name) in KEYS {
        let _ = writeln!(out, "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{name}\" attr.type=\"string\"/>");
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");

    let mut xml_ids: HashMap<&NodeId, String> = HashMap::new();
    for (i, node) in g.nodes().enumerate() {
        let xml_id = format!("n{i}");
        let _ = writeln!(
            out,
            "    <node id=\"{xml_id}\"><data key=\"d0\">{}</data><data key=\"d1\">{}</data></node>",
            escape(&node.display),
            escape(&provenance_text(&node.provenance)),
        );
        xml_ids.insert(&node.id, xml_id);
    }
    for (i, edge) in g.edges().enumerate() {
        let _ = write!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\"><data key=\"d2\">{}</data>",
            xml_ids[&edge.src],
            xml_ids[&edge.dst],
            escape(&edge.relation),
        );
        if let Some(note) = &edge.note {
            let _ = write!(out, "<data key=\"d3\">{}</data>", escape(note));
        }
        let _ = writeln!(out, "<data key=\"d4\">{}</data></edge>", escape(&provenance_text(&edge.provenance)));
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn parse_provenance(text: Option<&str>) -> Result<Provenance, GraphError> {
    text.unwrap_or("")
        .split_whitespace()
        .map(|s| s.parse::<StepRef>().map_err(GraphError::Schema))
        .collect()
}

/// Reads GraphML produced by [`to_graphml`] or any GraphML whose keys use
/// the same `attr.name`s. Key ids are resolved through the `<key>`
/// declarations; a node without `display` falls back to its `id`.
pub fn from_graphml(xml: &str) -> Result<KnowledgeGraph, GraphError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        GraphError::Parse { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "graphml" {
        return Err(GraphError::Schema(format!("root element is <{}>", root.tag_name().name())));
    }

    // (domain, key id) -> attribute name
    let mut key_names: HashMap<(String, String), String> = HashMap::new();
    for key in root.children().filter(|n| n.has_tag_name((GRAPHML_NS, "key")) || n.has_tag_name("key")) {
        let id = key.attribute("id").ok_or_else(|| GraphError::Schema("<key> without id".into()))?;
        let name = key.attribute("attr.name").unwrap_or(id);
        let domain = key.attribute("for").unwrap_or("all");
        key_names.insert((domain.to_string(), id.to_string()), name.to_string());
    }
    let lookup = |domain: &str, id: &str| {
        key_names
            .get(&(domain.to_string(), id.to_string()))
            .or_else(|| key_names.get(&("all".to_string(), id.to_string())))
            .cloned()
    };
    let data_of = |elem: roxmltree::Node<'_, '_>, domain: &str| -> Result<HashMap<String, String>, GraphError> {
        let mut data = HashMap::new();
        for d in elem.children().filter(|c| c.is_element() && c.tag_name().name() == "data") {
            let key = d.attribute("key").ok_or_else(|| GraphError::Schema("<data> without key".into()))?;
            let name = lookup(domain, key)
                .ok_or_else(|| GraphError::Schema(format!("<data> uses undeclared key {key:?}")))?;
            data.insert(name, d.text().unwrap_or("").to_string());
        }
        Ok(data)
    };

    let graph = root
        .children()
        .find(|n| n.is_element() && n.tag_name().name() == "graph")
        .ok_or_else(|| GraphError::Schema("missing <graph> element".into()))?;
    if graph.attribute("edgedefault") == Some("undirected") {
        return Err(GraphError::Schema("undirected GraphML is not a knowledge graph".into()));
    }

    let mut g = KnowledgeGraph::new();
    let mut by_xml_id: HashMap<&str, NodeId> = HashMap::new();
    for elem in graph.children().filter(|n| n.is_element() && n.tag_name().name() == "node") {
        let xml_id = elem.attribute("id").ok_or_else(|| GraphError::Schema("<node> without id".into()))?;
        let data = data_of(elem, "node")?;
        let display = clean_label(data.get("display").map_or(xml_id, String::as_str));
        if display.is_empty() {
            return Err(GraphError::Schema(format!("node {xml_id:?} has an empty label")));
        }
        let id = NodeId::from_label(&display);
        if g.node(&id).is_some() {
            return Err(GraphError::Schema(format!("duplicate node label {display:?}")));
        }
        let provenance = parse_provenance(data.get("provenance").map(String::as_str))?;
        g.insert_node(Node { id: id.clone(), display, provenance });
        if by_xml_id.insert(xml_id, id).is_some() {
            return Err(GraphError::Schema(format!("duplicate node id {xml_id:?}")));
        }
    }
    for elem in graph.children().filter(|n| n.is_element() && n.tag_name().name() == "edge") {
        let endpoint = |attr: &str| -> Result<NodeId, GraphError> {
            let xml_id = elem
                .attribute(attr)
                .ok_or_else(|| GraphError::Schema(format!("<edge> without {attr}")))?;
            by_xml_id
                .get(xml_id)
                .cloned()
                .ok_or_else(|| GraphError::Schema(format!("edge {attr} {xml_id:?} is not a node")))
        };
        let src = endpoint("source")?;
        let dst = endpoint("target")?;
        let data = data_of(elem, "edge")?;
        let relation = data
            .get("relation")
            .map(|r| canonical_relation(r))
            .filter(|r| !r.is_empty())
            .ok_or_else(|| GraphError::Schema(format!("edge {src} -> {dst} has no relation")))?;
        let edge = Edge {
            src,
            dst,
            relation,
            note: data.get("note").cloned(),
            provenance: parse_provenance(data.get("provenance").map(String::as_str))?,
        };
        g.insert_edge(edge).map_err(|_| GraphError::Schema("dangling edge".into()))?;
    }
    Ok(g)
}

/// Structural check of a document against the GraphML 1.0 content model:
/// root `graphml` in the GraphML namespace, `key*` before `graph+`,
/// `key` with `id`, a valid `for` domain and `attr.type`, `graph` with an
/// `edgedefault` of `directed|undirected`, `node` with a unique `id`, `edge`
/// with `source`/`target` naming declared nodes, and `data` referencing
/// declared keys for its domain.
pub fn validate_graphml(xml: &str) -> Result<(), GraphError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        GraphError::Parse { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let bad = |msg: String| Err(GraphError::Schema(msg));
    let root = doc.root_element();
    if !root.has_tag_name((GRAPHML_NS, "graphml")) {
        return bad("root must be <graphml> in the GraphML namespace".into());
    }
    let mut keys: HashMap<String, String> = HashMap::new();
    let mut seen_graph = false;
    for child in root.children().filter(|n| n.is_element()) {
        match child.tag_name().name() {
            "desc" if !seen_graph && keys.is_empty() => {}
            "key" if !seen_graph => {
                let id = child.attribute("id").ok_or_else(|| GraphError::Schema("<key> without id".into()))?;
                let domain = child.attribute("for").unwrap_or("all");
                if !["graph", "node", "edge", "hyperedge", "port", "endpoint", "all", "graphml"].contains(&domain) {
                    return bad(format!("key {id:?} has invalid for={domain:?}"));
                }
                if let Some(t) = child.attribute("attr.type") {
                    if !["boolean", "int", "long", "float", "double", "string"].contains(&t) {
                        return bad(format!("key {id:?} has invalid attr.type={t:?}"));
                    }
                }
                if keys.insert(id.to_string(), domain.to_string()).is_some() {
                    return bad(format!("duplicate key id {id:?}"));
                }
            }
            "graph" => {
                seen_graph = true;
                match child.attribute("edgedefault") {
                    Some("directed" | "undirected") => {}
                    other => return bad(format!("graph edgedefault {other:?}")),
                }
                validate_graph_children(child, &keys)?;
            }
            "data" => {}
            other => return bad(format!("unexpected <{other}> under <graphml>")),
        }
    }
    Ok(())
}

fn validate_graph_children(graph: roxmltree::Node<'_, '_>, keys: &HashMap<String, String>) -> Result<(), GraphError> {
    let check_data = |elem: roxmltree::Node<'_, '_>, domain: &str| -> Result<(), GraphError> {
        for d in elem.children().filter(|c| c.is_element()) {
            if d.tag_name().name() != "data" {
                return Err(GraphError::Schema(format!("unexpected <{}> in <{domain}>", d.tag_name().name())));
            }
            let key = d.attribute("key").ok_or_else(|| GraphError::Schema("<data> without key".into()))?;
            match keys.get(key).map(String::as_str) {
                Some(k) if k == domain || k == "all" => {}
                _ => return Err(GraphError::Schema(format!("<data key={key:?}> not declared for {domain}"))),
            }
        }
        Ok(())
    };
    let mut node_ids = std::collections::HashSet::new();
    for n in graph.children().filter(|n| n.is_element() && n.tag_name().name() == "node") {
        let id = n.attribute("id").ok_or_else(|| GraphError::Schema("<node> without id".into()))?;
        if !node_ids.insert(id) {
            return Err(GraphError::Schema(format!("duplicate node id {id:?}")));
        }
        check_data(n, "node")?;
    }
    for e in graph.children().filter(|n| n.is_element()) {
        match e.tag_name().name() {
            "node" | "data" | "desc" => {}
            "edge" => {
                for attr in ["source", "target"] {
                    let v = e.attribute(attr).ok_or_else(|| GraphError::Schema(format!("<edge> without {attr}")))?;
                    if !node_ids.contains(v) {
                        return Err(GraphError::Schema(format!("edge {attr} {v:?} is not a node")));
                    }
                }
                check_data(e, "edge")?;
            }
            other => return Err(GraphError::Schema(format!("unexpected <{other}> in <graph>"))),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::Triple;

    #[test]
    fn empty_graph_skeleton() {
        let xml = to_graphml(&KnowledgeGraph::new());
        validate_graphml(&xml).unwrap();
        assert!(xml.contains("edgedefault=\"directed\""));
        assert!(!xml.contains("<node"));
        assert!(from_graphml(&xml).unwrap().is_empty());
    }

    #[test]
    fn one_edge_element_with_relation() {
        let g = KnowledgeGraph::from_triples(&[Triple::new("Music", "IS-A", "Audio Signal")], &StepRef::new("s", 0));
        let xml = to_graphml(&g);
        assert_eq!(xml.matches("<edge ").count(), 1);
        assert!(xml.contains("<data key=\"d2\">IS-A</data>"));
        assert_eq!(from_graphml(&xml).unwrap(), g);
    }

    #[test]
    fn escapes_markup_in_labels() {
        let g = KnowledgeGraph::from_triples(
            &[Triple::new("A & <B>", "RELATES-TO", "\"C\" 'D'").with_note("x < y")],
            &StepRef::new("s", 1),
        );
        assert_eq!(from_graphml(&to_graphml(&g)).unwrap(), g);
    }

    #[test]
    fn truncated_xml_is_parse_error() {
        let xml = to_graphml(&KnowledgeGraph::new());
        let err = from_graphml(&xml[..xml.len() / 2]).unwrap_err();
        assert!(matches!(err, GraphError::Parse { line, .. } if line >= 1));
    }

    #[test]
    fn edge_to_missing_node_is_schema_error() {
        let xml = r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d2" for="edge" attr.name="relation" attr.type="string"/>
  <graph edgedefault="directed"><node id="a"/><edge source="a" target="zz"><data key="d2">IS-A</data></edge></graph>
</graphml>"#;
        assert!(matches!(from_graphml(xml), Err(GraphError::Schema(_))));
    }

    #[test]
    fn edge_without_relation_is_schema_error() {
        let xml = r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns"><graph edgedefault="directed">
<node id="a"/><node id="b"/><edge source="a" target="b"/></graph></graphml>"#;
        assert!(matches!(from_graphml(xml), Err(GraphError::Schema(_))));
    }
}
