//! JSON shapes shared by the CLI's `--json` output and the HTTP API.

use std::collections::BTreeMap;

use serde::Serialize;

use gpfo_core::garden::{GardenMode, GardenSession};
use gpfo_core::graph::{Edge, KnowledgeGraph, NodeId, Provenance};
use gpfo_core::metrics::{by_name, MetricReport, DEFAULT_TOP_K};

/// Metrics attached to every node of a graph view.
pub const OVERLAY_METRICS: [&str; 4] = ["degree", "pagerank", "bridging", "prestige"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Idle,
    Generating,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedNode {
    pub id: NodeId,
    pub display: String,
    pub degree: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphOverview {
    pub node_count: usize,
    pub edge_count: usize,
    pub top_degree: Vec<RankedNode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiSessionView {
    pub id: String,
    pub mode: GardenMode,
    pub seed_prompt: String,
    pub step_count: usize,
    pub max_steps: usize,
    pub graph: GraphOverview,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ApiSessionView {
    pub fn new(garden: &GardenSession, status: Status, error: Option<String>) -> Self {
        Self {
            id: garden.id.clone(),
            mode: garden.mode,
            seed_prompt: garden.seed_prompt.clone(),
            step_count: garden.steps.len(),
            max_steps: garden.max_steps,
            graph: overview(&garden.integrated, DEFAULT_TOP_K),
            status,
            error,
        }
    }
}

/// Counts plus the `k` highest-degree nodes (ties by id).
pub fn overview(g: &KnowledgeGraph, k: usize) -> GraphOverview {
    let report = by_name(g, "degree").map(|r| r.with_top_k(k)).unwrap_or_else(|_| empty("degree"));
    let top_degree = report
        .top_k
        .iter()
        .map(|(id, d)| RankedNode {
            display: g.node(id).map(|n| n.display.clone()).unwrap_or_default(),
            id: id.clone(),
            degree: *d as usize,
        })
        .collect();
    GraphOverview { node_count: g.node_count(), edge_count: g.edge_count(), top_degree }
}

fn empty(metric: &str) -> MetricReport {
    MetricReport::new(metric, BTreeMap::new())
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlayNode {
    pub id: NodeId,
    pub display: String,
    pub provenance: Provenance,
    pub metrics: BTreeMap<&'static str, f64>,
}

/// A graph with per-node metric overlays, for rendering.
#[derive(Debug, Clone, Serialize)]
pub struct GraphView {
    pub session: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub nodes: Vec<OverlayNode>,
    pub edges: Vec<Edge>,
}

impl GraphView {
    pub fn new(session: &str, step: Option<usize>, g: &KnowledgeGraph) -> Self {
        let reports: Vec<(&'static str, MetricReport)> =
            OVERLAY_METRICS.iter().map(|&m| (m, by_name(g, m).unwrap_or_else(|_| empty(m)))).collect();
        let nodes = g
            .nodes()
            .map(|n| OverlayNode {
                id: n.id.clone(),
                display: n.display.clone(),
                provenance: n.provenance.clone(),
                metrics: reports.iter().map(|(m, r)| (*m, r.values.get(&n.id).copied().unwrap_or(0.0))).collect(),
            })
            .collect();
        Self { session: session.to_string(), step, nodes, edges: g.edges().cloned().collect() }
    }
}
