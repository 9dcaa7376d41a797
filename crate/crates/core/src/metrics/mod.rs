//! Node metrics and structure statistics for knowledge graphs.
//!
//! PageRank, prestige and in/out degree use the directed edges; everything
//! else runs on the [`UndirectedView`](crate::graph::UndirectedView).
//! All relations weigh 1.

mod centrality;
mod community;
mod report;
mod structure;
mod summary;

pub use centrality::{
    bridging_coefficient, bridging_scores, degree, domain_prestige, in_degree, out_degree, pagerank,
    pagerank_scores, prestige_scores, PageRank, PageRankParams, PageRankRun,
};
pub use community::{communities, greedy_modularity, modularity, Community};
pub use report::{MetricReport, DEFAULT_TOP_K};
pub use structure::{
    betweenness, betweenness_scores, clustering_coefficients, clustering_scores, component_indices,
    connected_components, path_length_histogram, path_lengths,
};
pub use summary::{node_metrics_table, summarize, GraphSummary, CLUSTERING_BINS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

/// Metric names accepted by [`by_name`].
pub const METRIC_NAMES: [&str; 8] =
    ["degree", "in_degree", "out_degree", "pagerank", "bridging", "prestige", "clustering", "betweenness"];

/// Looks up a per-node metric by name (PageRank with default parameters).
pub fn by_name(g: &crate::graph::KnowledgeGraph, name: &str) -> Result<MetricReport, MetricsError> {
    Ok(match name {
        "degree" => degree(g),
        "in_degree" => in_degree(g),
        "out_degree" => out_degree(g),
        "pagerank" => pagerank(g, PageRankParams::default())?.report,
        "bridging" => bridging_coefficient(g),
        "prestige" => domain_prestige(g),
        "clustering" => clustering_coefficients(g),
        "betweenness" => betweenness(g),
        other => return Err(MetricsError::UnknownMetric(other.to_string())),
    })
}
