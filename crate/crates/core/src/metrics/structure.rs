use std::collections::{BTreeMap, VecDeque};

use super::MetricReport;
use crate::graph::{KnowledgeGraph, NodeId, UndirectedView};

/// Local clustering coefficient; 0 for nodes of degree < 2.
pub fn clustering_scores(v: &UndirectedView) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let nbrs = &v.adjacency[i];
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (a, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[a + 1..] {
                    if v.has_link(x, y) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (k * (k - 1)) as f64
        })
        .collect()
}

pub fn clustering_coefficients(g: &KnowledgeGraph) -> MetricReport {
    let v = UndirectedView::new(g);
    MetricReport::from_vec("clustering", &v.nodes, &clustering_scores(&v))
}

/// Unnormalized undirected betweenness (Brandes accumulation); each
/// unordered pair counts once.
pub fn betweenness_scores(v: &UndirectedView) -> Vec<f64> {
    let n = v.len();
    let mut bc = vec![0.0; n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        stack.clear();
        preds.iter_mut().for_each(Vec::clear);
        sigma.fill(0.0);
        dist.fill(-1);
        delta.fill(0.0);
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            stack.push(x);
            for &w in &v.adjacency[x] {
                if dist[w] < 0 {
                    dist[w] = dist[x] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[x] + 1 {
                    sigma[w] += sigma[x];
                    preds[w].push(x);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &x in &preds[w] {
                delta[x] += sigma[x] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

pub fn betweenness(g: &KnowledgeGraph) -> MetricReport {
    let v = UndirectedView::new(g);
    MetricReport::from_vec("betweenness", &v.nodes, &betweenness_scores(&v))
}

/// Connected components as index lists, largest first (ties: smallest
/// member first). Members are ascending.
pub fn component_indices(v: &UndirectedView) -> Vec<Vec<usize>> {
    let n = v.len();
    let mut comp = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[start] = id;
        let mut members = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &w in &v.adjacency[x] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    out
}

pub fn connected_components(g: &KnowledgeGraph) -> Vec<Vec<NodeId>> {
    let v = UndirectedView::new(g);
    component_indices(&v)
        .into_iter()
        .map(|c| c.into_iter().map(|i| v.nodes[i].clone()).collect())
        .collect()
}

/// Hop-count histogram over unordered node pairs of the largest component.
pub fn path_lengths(v: &UndirectedView) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    let Some(largest) = component_indices(v).into_iter().next() else {
        return hist;
    };
    let mut dist = vec![usize::MAX; v.len()];
    let mut queue = VecDeque::new();
    for &s in &largest {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(x) = queue.pop_front() {
            for &w in &v.adjacency[x] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[x] + 1;
                    queue.push_back(w);
                    if w > s {
                        *hist.entry(dist[w]).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    hist
}

pub fn path_length_histogram(g: &KnowledgeGraph) -> BTreeMap<usize, usize> {
    path_lengths(&UndirectedView::new(g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_clusters_fully() {
        let v = UndirectedView::from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(clustering_scores(&v), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn path_middle_carries_one_pair() {
        let v = UndirectedView::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(betweenness_scores(&v), [0.0, 1.0, 0.0]);
        assert_eq!(path_lengths(&v), BTreeMap::from([(1, 2), (2, 1)]));
    }

    #[test]
    fn two_triangles_two_components() {
        let v = UndirectedView::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]);
        assert_eq!(component_indices(&v), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn single_edge_histogram() {
        let v = UndirectedView::from_edges(2, &[(0, 1)]);
        assert_eq!(path_lengths(&v), BTreeMap::from([(1, 1)]));
        assert!(path_lengths(&UndirectedView::default()).is_empty());
    }
}
