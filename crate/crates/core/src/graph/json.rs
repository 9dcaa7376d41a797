use serde::{Deserialize, Serialize};

use super::{Edge, GraphError, KnowledgeGraph, Node};

/// Format tag carried by every graph JSON document.
pub const GRAPH_FORMAT: &str = "gpfo-graph/1";

/// Full-fidelity JSON form of a [`KnowledgeGraph`].
///
/// ```json
/// {"format": "gpfo-graph/1",
///  "nodes": [{"id": "music", "display": "Music",
///             "provenance": [{"session_id": "g", "step_index": 0}]}],
///  "edges": [{"src": "music", "dst": "audio signal", "relation": "IS-A",
///             "note": null, "provenance": [...]}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub format: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl From<&KnowledgeGraph> for GraphDocument {
    fn from(g: &KnowledgeGraph) -> Self {
        Self {
            format: GRAPH_FORMAT.to_string(),
            nodes: g.nodes().cloned().collect(),
            edges: g.edges().cloned().collect(),
        }
    }
}

impl TryFrom<GraphDocument> for KnowledgeGraph {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, Self::Error> {
        if doc.format != GRAPH_FORMAT {
            return Err(GraphError::Format(doc.format));
        }
        let mut g = KnowledgeGraph::new();
        for node in doc.nodes {
            g.insert_node(node);
        }
        for edge in doc.edges {
            g.insert_edge(edge).map_err(|e| {
                GraphError::Schema(format!("edge {} -> {} references a missing node", e.src, e.dst))
            })?;
        }
        Ok(g)
    }
}

impl Serialize for KnowledgeGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphDocument::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KnowledgeGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = GraphDocument::deserialize(deserializer)?;
        KnowledgeGraph::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl KnowledgeGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        KnowledgeGraph::try_from(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::Triple;
    use crate::graph::StepRef;

    #[test]
    fn json_round_trip_keeps_notes_and_provenance() {
        let mut g = KnowledgeGraph::from_triples(
            &[Triple::new("Snow Flakes", "INFLUENCES", "Mood").with_note("e.g., Serene")],
            &StepRef::new("g", 0),
        );
        g.merge_from(&KnowledgeGraph::from_triples(&[Triple::new("mood", "IS-A", "State")], &StepRef::new("g", 1)));
        let text = g.to_json();
        assert!(text.contains("\"format\": \"gpfo-graph/1\""));
        assert_eq!(KnowledgeGraph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn wrong_tag_rejected() {
        let err = KnowledgeGraph::from_json(r#"{"format":"other","nodes":[],"edges":[]}"#).unwrap_err();
        assert!(matches!(err, GraphError::Format(_)));
    }

    #[test]
    fn dangling_edge_rejected() {
        let text = r#"{"format":"gpfo-graph/1","nodes":[],"edges":[{"src":"a","dst":"b","relation":"IS-A","provenance":[]}]}"#;
        assert!(matches!(KnowledgeGraph::from_json(text), Err(GraphError::Schema(_))));
    }
}
