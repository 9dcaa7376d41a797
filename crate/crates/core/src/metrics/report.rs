use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

pub const DEFAULT_TOP_K: usize = 10;

/// One value per node plus the leading entries of the descending sort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub values: BTreeMap<NodeId, f64>,
    /// Descending by value, ties by `NodeId` ascending.
    pub top_k: Vec<(NodeId, f64)>,
}

impl MetricReport {
    pub fn new(metric: &str, values: BTreeMap<NodeId, f64>) -> Self {
        let mut r = Self { metric: metric.to_string(), values, top_k: Vec::new() };
        r.top_k = r.ranked().into_iter().take(DEFAULT_TOP_K).collect();
        r
    }

    pub(crate) fn from_vec(metric: &str, nodes: &[NodeId], scores: &[f64]) -> Self {
        Self::new(metric, nodes.iter().cloned().zip(scores.iter().copied()).collect())
    }

    /// Full descending sort.
    pub fn ranked(&self) -> Vec<(NodeId, f64)> {
        let mut all: Vec<_> = self.values.iter().map(|(k, v)| (k.clone(), *v)).collect();
        all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all
    }

    pub fn with_top_k(mut self, k: usize) -> Self {
        self.top_k = self.ranked().into_iter().take(k).collect();
        self
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(&NodeId::from_label(id)).copied()
    }
}
