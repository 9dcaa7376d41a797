//! Greedy modularity agglomeration (Clauset–Newman–Moore), exact integer
//! gains so ties resolve the same way everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::structure::component_indices;
use crate::graph::{KnowledgeGraph, NodeId, UndirectedView};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Community {
    pub members: Vec<NodeId>,
    /// Highest-degree member, ties by `NodeId`.
    pub central: NodeId,
}

/// Newman modularity of a partition given as community index lists.
pub fn modularity(v: &UndirectedView, partition: &[Vec<usize>]) -> f64 {
    let m = v.link_count() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut label = vec![usize::MAX; v.len()];
    for (c, members) in partition.iter().enumerate() {
        for &x in members {
            label[x] = c;
        }
    }
    let mut internal = vec![0usize; partition.len()];
    let mut degree_sum = vec![0usize; partition.len()];
    for x in 0..v.len() {
        degree_sum[label[x]] += v.degree(x);
        for &y in &v.adjacency[x] {
            if x < y && label[x] == label[y] {
                internal[label[x]] += 1;
            }
        }
    }
    internal
        .iter()
        .zip(&degree_sum)
        .map(|(&l, &d)| l as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum()
}

/// Greedy agglomeration from singletons, merging the connected pair with
/// the largest positive modularity gain (lowest index pair on ties) until
/// no merge improves modularity. Falls back to the component partition if
/// the result would score below the one-community partition.
pub fn greedy_modularity(v: &UndirectedView) -> Vec<Vec<usize>> {
    let n = v.len();
    let m = v.link_count() as i128;
    let mut members: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    if m > 0 {
        let mut alive = vec![true; n];
        let mut dsum: Vec<i128> = (0..n).map(|x| v.degree(x) as i128).collect();
        // links[c][d]: number of links between communities c and d.
        let mut links: Vec<BTreeMap<usize, i128>> =
            (0..n).map(|x| v.adjacency[x].iter().map(|&y| (y, 1)).collect()).collect();
        loop {
            // gain ∝ 2m·l_cd − D_c·D_d
            let mut best: Option<(i128, usize, usize)> = None;
            for c in (0..n).filter(|&c| alive[c]) {
                for (&d, &l) in links[c].range(c + 1..) {
                    let gain = 2 * m * l - dsum[c] * dsum[d];
                    if best.is_none_or(|(g, _, _)| gain > g) {
                        best = Some((gain, c, d));
                    }
                }
            }
            let Some((gain, c, d)) = best.filter(|b| b.0 > 0) else { break };
            debug_assert!(gain > 0);
            alive[d] = false;
            dsum[c] += dsum[d];
            let moved = std::mem::take(&mut members[d]);
            members[c].extend(moved);
            let d_links = std::mem::take(&mut links[d]);
            links[c].remove(&d);
            for (x, l) in d_links {
                if x == c {
                    continue;
                }
                *links[c].entry(x).or_insert(0) += l;
                links[x].remove(&d);
                *links[x].entry(c).or_insert(0) += l;
            }
        }
    }
    let mut partition: Vec<Vec<usize>> = members.into_iter().filter(|c| !c.is_empty()).collect();
    partition.iter_mut().for_each(|c| c.sort_unstable());
    if modularity(v, &partition) < 0.0 {
        partition = component_indices(v);
    }
    partition.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    partition
}

pub fn communities(g: &KnowledgeGraph) -> Vec<Community> {
    let v = UndirectedView::new(g);
    label_communities(&v, &greedy_modularity(&v))
}

pub(crate) fn label_communities(v: &UndirectedView, partition: &[Vec<usize>]) -> Vec<Community> {
    partition
        .iter()
        .map(|c| {
            // Node indices follow NodeId order, so the first maximum wins ties.
            let central = c.iter().copied().fold(c[0], |best, x| if v.degree(x) > v.degree(best) { x } else { best });
            Community { members: c.iter().map(|&x| v.nodes[x].clone()).collect(), central: v.nodes[central].clone() }
        })
        .collect()
}
