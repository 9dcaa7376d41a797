//! Deterministic inputs for the benchmarks.

use gpfo_core::format::{render_graph_block, Triple};
use gpfo_core::gin::GinGraph;
use gpfo_core::graph::{KnowledgeGraph, StepRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `m` random triples over `n` concepts, roughly the shape of a grown garden.
pub fn triples(n: usize, m: usize, seed: u64) -> Vec<Triple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let relations = ["IS-A", "RELATES-TO", "INFLUENCES", "PART-OF"];
    (0..m)
        .map(|_| {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            Triple::new(&format!("Concept {a}"), relations[rng.random_range(0..4)], &format!("Concept {b}"))
        })
        .collect()
}

pub fn knowledge_graph(n: usize, m: usize, seed: u64) -> KnowledgeGraph {
    KnowledgeGraph::from_triples(&triples(n, m, seed), &StepRef::new("bench", 0))
}

/// A knowledge-graph listing with `m` numbered items.
pub fn graph_block(m: usize, seed: u64) -> String {
    render_graph_block(&triples(m / 2 + 1, m, seed))
}

pub fn gin_graph(n: usize, p: f64, seed: u64) -> GinGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.random_bool(p)).collect();
    let emb = (0..n).map(|i| vec![i as f64 / n as f64, 1.0 - i as f64 / n as f64]).collect();
    GinGraph::new(&refs, &edges, emb).expect("well-formed graph")
}
