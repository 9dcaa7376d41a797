use std::collections::{BTreeSet, HashMap};

use super::{KnowledgeGraph, NodeId};

/// Simple undirected view of a knowledge graph: one link per unordered node
/// pair joined by at least one directed edge. Self-loops are excluded and
/// listed in `self_loops`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UndirectedView {
    pub nodes: Vec<NodeId>,
    /// Sorted neighbor indices per node.
    pub adjacency: Vec<Vec<usize>>,
    pub self_loops: Vec<NodeId>,
}

impl UndirectedView {
    pub fn new(g: &KnowledgeGraph) -> Self {
        let nodes: Vec<NodeId> = g.node_ids().cloned().collect();
        let index: HashMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut sets = vec![BTreeSet::new(); nodes.len()];
        let mut loops = BTreeSet::new();
        for e in g.edges() {
            let (a, b) = (index[&e.src], index[&e.dst]);
            if a == b {
                loops.insert(e.src.clone());
                continue;
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Self {
            nodes,
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            self_loops: loops.into_iter().collect(),
        }
    }

    /// Builds a view straight from an edge list over `0..n` (used by tests
    /// and benchmarks). Node ids are `v0, v1, …`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Self {
            nodes: (0..n).map(|i| NodeId::from_label(&format!("v{i:03}"))).collect(),
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            self_loops: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn link_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_link(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }
}

/// Index-based directed adjacency with parallel relations collapsed to one
/// link per ordered pair. Self-loops are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirectedIndex {
    pub nodes: Vec<NodeId>,
    pub out: Vec<Vec<usize>>,
}

impl DirectedIndex {
    pub fn new(g: &KnowledgeGraph) -> Self {
        let nodes: Vec<NodeId> = g.node_ids().cloned().collect();
        let index: HashMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut sets = vec![BTreeSet::new(); nodes.len()];
        for e in g.edges() {
            sets[index[&e.src]].insert(index[&e.dst]);
        }
        Self { nodes, out: sets.into_iter().map(|s| s.into_iter().collect()).collect() }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            sets[a].insert(b);
        }
        Self {
            nodes: (0..n).map(|i| NodeId::from_label(&format!("v{i:03}"))).collect(),
            out: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reverse adjacency (in-neighbors per node).
    pub fn reversed(&self) -> Vec<Vec<usize>> {
        let mut rev = vec![Vec::new(); self.nodes.len()];
        for (u, outs) in self.out.iter().enumerate() {
            for &v in outs {
                rev[v].push(u);
            }
        }
        rev
    }
}
