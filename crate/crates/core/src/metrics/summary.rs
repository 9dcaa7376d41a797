use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::centrality::{bridging_scores, pagerank_scores, prestige_scores, PageRankParams};
use super::community::{greedy_modularity, label_communities, Community};
use super::structure::{betweenness_scores, clustering_scores, component_indices, path_lengths};
use crate::graph::{DirectedIndex, KnowledgeGraph, NodeId, UndirectedView};

/// Clustering values are binned into `[0, 0.1), …, [0.9, 1.0]`.
pub const CLUSTERING_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub link_count: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    /// Empty for an empty graph, otherwise [`CLUSTERING_BINS`] counts.
    pub clustering_histogram: Vec<usize>,
    pub betweenness: BTreeMap<NodeId, f64>,
    pub path_length_histogram: BTreeMap<usize, usize>,
    pub components: Vec<Vec<NodeId>>,
    pub communities: Vec<Community>,
    pub modularity: f64,
    pub self_loops: Vec<NodeId>,
}

pub fn summarize(g: &KnowledgeGraph) -> GraphSummary {
    let v = UndirectedView::new(g);
    let mut degree_histogram = BTreeMap::new();
    for x in 0..v.len() {
        *degree_histogram.entry(v.degree(x)).or_insert(0) += 1;
    }
    let mut clustering_histogram = if v.is_empty() { Vec::new() } else { vec![0; CLUSTERING_BINS] };
    for c in clustering_scores(&v) {
        let bin = ((c * CLUSTERING_BINS as f64) as usize).min(CLUSTERING_BINS - 1);
        clustering_histogram[bin] += 1;
    }
    let partition = greedy_modularity(&v);
    let names = |c: Vec<usize>| c.into_iter().map(|i| v.nodes[i].clone()).collect();
    GraphSummary {
        node_count: g.node_count(),
        edge_count: g.edge_count(),
        link_count: v.link_count(),
        degree_histogram,
        clustering_histogram,
        betweenness: v.nodes.iter().cloned().zip(betweenness_scores(&v)).collect(),
        path_length_histogram: path_lengths(&v),
        components: component_indices(&v).into_iter().map(names).collect(),
        modularity: super::community::modularity(&v, &partition),
        communities: label_communities(&v, &partition),
        self_loops: v.self_loops.clone(),
    }
}

/// Plain-text table of the top `k` display labels per column: node degree,
/// PageRank, bridging coefficient and domain prestige.
pub fn node_metrics_table(g: &KnowledgeGraph, k: usize) -> String {
    let v = UndirectedView::new(g);
    let idx = DirectedIndex::new(g);
    let degree: Vec<f64> = (0..v.len()).map(|i| v.degree(i) as f64).collect();
    let pagerank = pagerank_scores(&idx, PageRankParams::default()).map(|r| r.scores).unwrap_or_default();
    let columns = [
        ("Node Degree", degree),
        ("Page Rank", pagerank),
        ("Bridging Coefficient", bridging_scores(&v)),
        ("Domain Prestige", prestige_scores(&idx)),
    ];
    let ranked: Vec<Vec<String>> = columns
        .iter()
        .map(|(_, scores)| {
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            order
                .into_iter()
                .take(k)
                .map(|i| g.node(&v.nodes[i]).map_or_else(|| v.nodes[i].to_string(), |n| n.display.clone()))
                .collect()
        })
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .zip(&ranked)
        .map(|((h, _), col)| col.iter().map(|s| s.chars().count()).chain([h.len()]).max().unwrap_or(0))
        .collect();
    let row = |cells: Vec<&str>| {
        let padded: Vec<String> =
            cells.iter().zip(&widths).map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
        padded.join(" | ").trim_end().to_string()
    };
    let mut out = String::new();
    let _ = writeln!(out, "{}", row(columns.iter().map(|(h, _)| *h).collect()));
    let _ = writeln!(out, "{}", widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("-+-"));
    for r in 0..ranked.iter().map(Vec::len).max().unwrap_or(0) {
        let _ = writeln!(out, "{}", row(ranked.iter().map(|col| col.get(r).map_or("", String::as_str)).collect()));
    }
    out
}
