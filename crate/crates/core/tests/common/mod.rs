//! Independent oracles and random-graph generators shared by the metric,
//! GIN and acceptance tests. Nothing here calls the algorithms under test.
#![allow(dead_code)]

use std::collections::BTreeSet;

use gpfo_core::format::Triple;
use gpfo_core::graph::{KnowledgeGraph, StepRef};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Directed edge list over `0..n` (no duplicates; self-loops optional).
#[derive(Debug, Clone)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn random_digraph(rng: &mut ChaCha8Rng, max_n: usize, self_loops: bool) -> Digraph {
    let n = rng.random_range(1..=max_n);
    let p: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if (a != b || self_loops) && rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Digraph { n, edges }
}

pub fn label(i: usize) -> String {
    format!("v{i:02}")
}

/// Knowledge graph with nodes `v00, v01, …` so NodeId order equals index order.
pub fn to_knowledge_graph(d: &Digraph) -> KnowledgeGraph {
    let step = StepRef::new("oracle", 0);
    let mut g = KnowledgeGraph::new();
    for i in 0..d.n {
        g.add_node(&label(i), &step);
    }
    for &(a, b) in &d.edges {
        g.add_triple(&Triple::new(&label(a), "RELATES-TO", &label(b)), &step);
    }
    g
}

/// Stationary vector of the Google matrix by a dense linear solve of
/// `(I − d·M) x = (1 − d)/n · 1`, dangling columns replaced by `1/n`.
pub fn pagerank_dense(d: &Digraph, damping: f64) -> Vec<f64> {
    let n = d.n;
    let mut out = vec![BTreeSet::new(); n];
    for &(a, b) in &d.edges {
        out[a].insert(b);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        if out[j].is_empty() {
            for i in 0..n {
                m[(i, j)] = 1.0 / n as f64;
            }
        } else {
            for &i in &out[j] {
                m[(i, j)] = 1.0 / out[j].len() as f64;
            }
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - m * damping;
    let rhs = DVector::<f64>::from_element(n, (1.0 - damping) / n as f64);
    let x = a.lu().solve(&rhs).expect("Google system is nonsingular");
    x.iter().copied().collect()
}

/// Prestige by repeated forward traversal from every source.
pub fn prestige_brute(d: &Digraph) -> Vec<f64> {
    let n = d.n;
    if n < 2 {
        return vec![0.0; n];
    }
    let mut reaches = vec![vec![false; n]; n];
    for (u, row) in reaches.iter_mut().enumerate() {
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            for &(a, b) in &d.edges {
                if a == x && !row[b] {
                    row[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    (0..n)
        .map(|v| (0..n).filter(|&u| u != v && reaches[u][v]).count() as f64 / (n - 1) as f64)
        .collect()
}

/// Undirected simple adjacency matrix of a digraph (self-loops dropped).
pub fn undirected_matrix(d: &Digraph) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; d.n]; d.n];
    for &(a, b) in &d.edges {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    adj
}

/// Betweenness by listing every simple path between every pair and keeping
/// the shortest ones.
pub fn betweenness_exhaustive(d: &Digraph) -> Vec<f64> {
    let adj = undirected_matrix(d);
    let n = d.n;
    let mut bc = vec![0.0; n];
    fn walk(adj: &[Vec<bool>], path: &mut Vec<usize>, t: usize, found: &mut Vec<Vec<usize>>) {
        let x = *path.last().unwrap();
        if x == t {
            found.push(path.clone());
            return;
        }
        for y in 0..adj.len() {
            if adj[x][y] && !path.contains(&y) {
                path.push(y);
                walk(adj, path, t, found);
                path.pop();
            }
        }
    }
    for s in 0..n {
        for t in s + 1..n {
            let mut found = Vec::new();
            walk(&adj, &mut vec![s], t, &mut found);
            let Some(shortest) = found.iter().map(Vec::len).min() else { continue };
            let paths: Vec<_> = found.into_iter().filter(|p| p.len() == shortest).collect();
            for (v, b) in bc.iter_mut().enumerate() {
                if v != s && v != t {
                    let through = paths.iter().filter(|p| p.contains(&v)).count();
                    *b += through as f64 / paths.len() as f64;
                }
            }
        }
    }
    bc
}

/// Direct evaluation of `(1/deg v) / Σ_{u ∈ N(v)} 1/deg u`.
pub fn bridging_direct(d: &Digraph) -> Vec<f64> {
    let adj = undirected_matrix(d);
    let deg: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&b| b).count()).collect();
    (0..d.n)
        .map(|v| {
            if deg[v] == 0 {
                return 0.0;
            }
            let s: f64 = (0..d.n).filter(|&u| adj[v][u]).map(|u| 1.0 / deg[u] as f64).sum();
            (1.0 / deg[v] as f64) / s
        })
        .collect()
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            out.push(p.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Isomorphism of two simple undirected graphs by trying every bijection.
pub fn isomorphic_brute(a: &[Vec<bool>], b: &[Vec<bool>]) -> bool {
    let n = a.len();
    if n != b.len() {
        return false;
    }
    permutations(n)
        .into_iter()
        .any(|p| (0..n).all(|i| (0..n).all(|j| a[i][j] == b[p[i]][p[j]])))
}

pub fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
