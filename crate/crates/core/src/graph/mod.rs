//! Typed directed knowledge graph with per-element provenance.

mod graphml;
mod json;
mod undirected;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::format::Triple;
use crate::label::{canonical_relation, clean_label, label_key};

pub use graphml::{from_graphml, to_graphml, validate_graphml};
pub use json::{GraphDocument, GRAPH_FORMAT};
pub use undirected::{DirectedIndex, UndirectedView};

/// Simple undirected view used by the undirected metrics.
pub fn induced_undirected(g: &KnowledgeGraph) -> UndirectedView {
    UndirectedView::new(g)
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("malformed GraphML at line {line}, column {column}: {message}")]
    Parse { line: u32, column: u32, message: String },
    #[error("GraphML schema violation: {0}")]
    Schema(String),
    #[error("graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported graph format tag {0:?}")]
    Format(String),
}

/// Normalized concept key: markup stripped, whitespace collapsed, lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn from_label(label: &str) -> Self {
        Self(label_key(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which session step introduced an element. Rendered as `session#index`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepRef {
    session_id: String,
    step_index: u32,
}

impl StepRef {
    /// Whitespace and `#` in the session id are replaced by `-` so the
    /// textual form stays unambiguous.
    pub fn new(session_id: &str, step_index: u32) -> Self {
        let session_id = session_id
            .chars()
            .map(|c| if c.is_whitespace() || c == '#' { '-' } else { c })
            .collect();
        Self { session_id, step_index }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }
}

impl fmt::Display for StepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.session_id, self.step_index)
    }
}

impl FromStr for StepRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (session, index) = s.rsplit_once('#').ok_or_else(|| format!("bad step ref {s:?}"))?;
        let index = index.parse().map_err(|_| format!("bad step index in {s:?}"))?;
        if session.is_empty() {
            return Err(format!("empty session id in {s:?}"));
        }
        Ok(StepRef::new(session, index))
    }
}

pub type Provenance = BTreeSet<StepRef>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub display: String,
    pub provenance: Provenance,
}

/// Identity of an edge: at most one edge per `(src, dst, relation)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub provenance: Provenance,
}

impl Edge {
    pub fn key(&self) -> EdgeKey {
        EdgeKey { src: self.src.clone(), dst: self.dst.clone(), relation: self.relation.clone() }
    }

    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }
}

/// Directed concept graph `G = (V, E)`.
///
/// Nodes and edges are kept in key order so every traversal, export and
/// report is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<EdgeKey, Edge>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples(triples: &[Triple], step: &StepRef) -> Self {
        let mut g = Self::new();
        for t in triples {
            g.add_triple(t, step);
        }
        g
    }

    /// Inserts (or merges provenance into) a node; the first display label wins.
    /// Returns `None` for labels that normalize to nothing.
    pub fn add_node(&mut self, label: &str, step: &StepRef) -> Option<NodeId> {
        let display = clean_label(label);
        if display.is_empty() {
            return None;
        }
        let id = NodeId::from_label(&display);
        let node = self.nodes.entry(id.clone()).or_insert_with(|| Node {
            id: id.clone(),
            display,
            provenance: Provenance::new(),
        });
        node.provenance.insert(step.clone());
        Some(id)
    }

    pub fn add_triple(&mut self, triple: &Triple, step: &StepRef) -> Option<EdgeKey> {
        let relation = canonical_relation(&triple.relation);
        if relation.is_empty() {
            return None;
        }
        let src = self.add_node(&triple.subject, step)?;
        let dst = self.add_node(&triple.object, step)?;
        let edge = Edge {
            src,
            dst,
            relation,
            note: triple.note.clone(),
            provenance: Provenance::from([step.clone()]),
        };
        let key = edge.key();
        self.merge_edge(edge);
        self.debug_check();
        Some(key)
    }

    fn merge_node(&mut self, node: Node) {
        match self.nodes.get_mut(&node.id) {
            Some(existing) => existing.provenance.extend(node.provenance),
            None => {
                self.nodes.insert(node.id.clone(), node);
            }
        }
    }

    fn merge_edge(&mut self, edge: Edge) {
        match self.edges.get_mut(&edge.key()) {
            Some(existing) => {
                existing.provenance.extend(edge.provenance);
                if existing.note.is_none() {
                    existing.note = edge.note;
                }
            }
            None => {
                self.edges.insert(edge.key(), edge);
            }
        }
    }

    /// Inserts a fully formed node.
    pub fn insert_node(&mut self, node: Node) {
        self.merge_node(node);
    }

    /// Inserts a fully formed edge; both endpoints must already exist.
    pub fn insert_edge(&mut self, edge: Edge) -> Result<(), Edge> {
        if !self.nodes.contains_key(&edge.src) || !self.nodes.contains_key(&edge.dst) {
            return Err(edge);
        }
        self.merge_edge(edge);
        Ok(())
    }

    /// In-place union: nodes by id, edges by `(src, dst, relation)`,
    /// provenance sets united, existing display labels and notes kept.
    pub fn merge_from(&mut self, other: &KnowledgeGraph) {
        for node in other.nodes.values() {
            self.merge_node(node.clone());
        }
        for edge in other.edges.values() {
            self.merge_edge(edge.clone());
        }
        self.debug_check();
    }

    pub fn merge(&self, incoming: &KnowledgeGraph) -> KnowledgeGraph {
        let mut out = self.clone();
        out.merge_from(incoming);
        out
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn node_by_label(&self, label: &str) -> Option<&Node> {
        self.nodes.get(&NodeId::from_label(label))
    }

    pub fn edge(&self, key: &EdgeKey) -> Option<&Edge> {
        self.edges.get(key)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn self_loops(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values().filter(|e| e.is_self_loop())
    }

    /// Every step that contributed at least one element.
    pub fn steps(&self) -> BTreeSet<StepRef> {
        self.nodes
            .values()
            .flat_map(|n| n.provenance.iter())
            .chain(self.edges.values().flat_map(|e| e.provenance.iter()))
            .cloned()
            .collect()
    }

    /// The elements a single step contributed, with provenance narrowed to
    /// that step.
    pub fn filter_by_step(&self, step: &StepRef) -> KnowledgeGraph {
        let mut out = KnowledgeGraph::new();
        for node in self.nodes.values().filter(|n| n.provenance.contains(step)) {
            out.nodes.insert(
                node.id.clone(),
                Node { provenance: Provenance::from([step.clone()]), ..node.clone() },
            );
        }
        for edge in self.edges.values().filter(|e| e.provenance.contains(step)) {
            out.edges.insert(
                edge.key(),
                Edge { provenance: Provenance::from([step.clone()]), ..edge.clone() },
            );
        }
        out.debug_check();
        out
    }

    /// Verifies that no edge dangles and every element carries provenance
    /// where required. Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (key, edge) in &self.edges {
            if *key != edge.key() {
                return Err(format!("edge stored under wrong key: {key:?}"));
            }
            for end in [&edge.src, &edge.dst] {
                if !self.nodes.contains_key(end) {
                    return Err(format!("dangling edge endpoint {end}"));
                }
            }
        }
        for (id, node) in &self.nodes {
            if *id != node.id {
                return Err(format!("node stored under wrong id: {id}"));
            }
        }
        Ok(())
    }

    #[inline]
    fn debug_check(&self) {
        #[cfg(debug_assertions)]
        if let Err(e) = self.check_invariants() {
            panic!("knowledge graph invariant violated: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_graph_block;

    fn step(i: u32) -> StepRef {
        StepRef::new("s", i)
    }

    #[test]
    fn single_triple() {
        let g = KnowledgeGraph::from_triples(&[Triple::new("Music", "IS-A", "Audio Signal")], &step(0));
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert!(g.node_by_label("music").is_some());
    }

    #[test]
    fn empty_triples_empty_graph() {
        assert!(KnowledgeGraph::from_triples(&[], &step(0)).is_empty());
    }

    #[test]
    fn merge_identity_and_idempotence() {
        let g = KnowledgeGraph::from_triples(
            &parse_graph_block("**A** -[IS-A]-> **B** -[INFLUENCES]-> **C**").value,
            &step(0),
        );
        assert_eq!(g.merge(&KnowledgeGraph::new()), g);
        assert_eq!(g.merge(&g), g);
    }

    #[test]
    fn case_variants_collapse_with_united_provenance() {
        let a = KnowledgeGraph::from_triples(&[Triple::new("Music", "IS-A", "Art")], &step(0));
        let b = KnowledgeGraph::from_triples(&[Triple::new("music", "RELATES-TO", "Sound")], &step(1));
        let m = a.merge(&b);
        let node = m.node_by_label("MUSIC").unwrap();
        assert_eq!(node.display, "Music");
        assert_eq!(node.provenance, Provenance::from([step(0), step(1)]));
        assert_eq!(m.node_count(), 3);
    }

    #[test]
    fn distinct_relations_stay_separate_edges() {
        let g = KnowledgeGraph::from_triples(
            &[Triple::new("A", "IS-A", "B"), Triple::new("A", "RELATES-TO", "B"), Triple::new("a", "is-a", "b")],
            &step(0),
        );
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn filter_by_step_recovers_contribution() {
        let a = KnowledgeGraph::from_triples(&[Triple::new("A", "IS-A", "B")], &step(0));
        let b = KnowledgeGraph::from_triples(&[Triple::new("B", "IS-A", "C")], &step(1));
        let m = a.merge(&b);
        assert_eq!(m.filter_by_step(&step(1)), b);
        assert_eq!(m.filter_by_step(&step(0)), a);
        assert_eq!(m.steps().len(), 2);
    }

    #[test]
    fn insert_edge_rejects_dangling() {
        let mut g = KnowledgeGraph::new();
        let edge = Edge {
            src: NodeId::from_label("x"),
            dst: NodeId::from_label("y"),
            relation: "IS-A".into(),
            note: None,
            provenance: Provenance::new(),
        };
        assert!(g.insert_edge(edge).is_err());
    }

    #[test]
    fn step_ref_text_form() {
        let s = StepRef::new("garden one", 3);
        assert_eq!(s.to_string(), "garden-one#3");
        assert_eq!("garden-one#3".parse::<StepRef>().unwrap(), s);
        assert!("nohash".parse::<StepRef>().is_err());
    }

    #[test]
    fn self_loops_are_kept_and_flagged() {
        let g = KnowledgeGraph::from_triples(&[Triple::new("A", "RELATES-TO", "a")], &step(0));
        assert_eq!(g.self_loops().count(), 1);
    }
}
