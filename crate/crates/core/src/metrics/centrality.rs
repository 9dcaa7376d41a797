use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{MetricReport, MetricsError};
use crate::graph::{DirectedIndex, KnowledgeGraph, UndirectedView};

pub fn degree(g: &KnowledgeGraph) -> MetricReport {
    let v = UndirectedView::new(g);
    let scores: Vec<f64> = (0..v.len()).map(|i| v.degree(i) as f64).collect();
    MetricReport::from_vec("degree", &v.nodes, &scores)
}

/// Directed edges into each node; parallel relations count separately.
pub fn in_degree(g: &KnowledgeGraph) -> MetricReport {
    let mut values: std::collections::BTreeMap<_, f64> = g.node_ids().map(|id| (id.clone(), 0.0)).collect();
    for e in g.edges() {
        *values.get_mut(&e.dst).unwrap() += 1.0;
    }
    MetricReport::new("in_degree", values)
}

pub fn out_degree(g: &KnowledgeGraph) -> MetricReport {
    let mut values: std::collections::BTreeMap<_, f64> = g.node_ids().map(|id| (id.clone(), 0.0)).collect();
    for e in g.edges() {
        *values.get_mut(&e.src).unwrap() += 1.0;
    }
    MetricReport::new("out_degree", values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    /// Convergence threshold on the L1 change between sweeps.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self { damping: 0.85, tol: 1e-9, max_iters: 100 }
    }
}

/// Raw power-iteration result over node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PageRankRun {
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRank {
    pub report: MetricReport,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration with uniform teleportation; the mass of nodes without
/// out-links is spread uniformly on every sweep.
pub fn pagerank_scores(idx: &DirectedIndex, p: PageRankParams) -> Result<PageRankRun, MetricsError> {
    if !(p.damping > 0.0 && p.damping < 1.0) {
        return Err(MetricsError::InvalidParameter(format!("damping {} not in (0, 1)", p.damping)));
    }
    if !(p.tol > 0.0) {
        return Err(MetricsError::InvalidParameter(format!("tol {} must be positive", p.tol)));
    }
    let n = idx.len();
    if n == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < p.max_iters {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&v| idx.out[v].is_empty()).map(|v| x[v]).sum();
        let base = (1.0 - p.damping) / nf + p.damping * dangling / nf;
        next.fill(base);
        for (u, outs) in idx.out.iter().enumerate() {
            if outs.is_empty() {
                continue;
            }
            let share = p.damping * x[u] / outs.len() as f64;
            for &v in outs {
                next[v] += share;
            }
        }
        // Guard against drift in the total mass.
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < p.tol {
            converged = true;
            break;
        }
    }
    Ok(PageRankRun { scores: x, iterations, converged })
}

pub fn pagerank(g: &KnowledgeGraph, p: PageRankParams) -> Result<PageRank, MetricsError> {
    let idx = DirectedIndex::new(g);
    let run = pagerank_scores(&idx, p)?;
    Ok(PageRank {
        report: MetricReport::from_vec("pagerank", &idx.nodes, &run.scores),
        iterations: run.iterations,
        converged: run.converged,
    })
}

/// `BC(v) = (1/deg v) / Σ_{u ∈ N(v)} 1/deg u`; 0 for isolated nodes.
pub fn bridging_scores(v: &UndirectedView) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let d = v.degree(i);
            if d == 0 {
                return 0.0;
            }
            let denom: f64 = v.adjacency[i].iter().map(|&u| 1.0 / v.degree(u) as f64).sum();
            (1.0 / d as f64) / denom
        })
        .collect()
}

pub fn bridging_coefficient(g: &KnowledgeGraph) -> MetricReport {
    let v = UndirectedView::new(g);
    MetricReport::from_vec("bridging", &v.nodes, &bridging_scores(&v))
}

/// Fraction of the other nodes that reach each node along directed edges.
pub fn prestige_scores(idx: &DirectedIndex) -> Vec<f64> {
    let n = idx.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let rev = idx.reversed();
    let mut seen = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    (0..n)
        .map(|target| {
            seen[target] = target;
            queue.push_back(target);
            let mut reached = 0usize;
            while let Some(v) = queue.pop_front() {
                for &u in &rev[v] {
                    if seen[u] != target {
                        seen[u] = target;
                        reached += 1;
                        queue.push_back(u);
                    }
                }
            }
            reached as f64 / (n - 1) as f64
        })
        .collect()
}

pub fn domain_prestige(g: &KnowledgeGraph) -> MetricReport {
    let idx = DirectedIndex::new(g);
    MetricReport::from_vec("prestige", &idx.nodes, &prestige_scores(&idx))
}
