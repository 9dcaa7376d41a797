mod common;

use common::*;
use gpfo_core::graph::{induced_undirected, KnowledgeGraph, NodeId};
use gpfo_core::metrics::{
    betweenness, bridging_coefficient, clustering_coefficients, communities, connected_components, degree,
    domain_prestige, greedy_modularity, modularity, pagerank, path_length_histogram, summarize, MetricReport,
    PageRankParams,
};

fn values(r: &MetricReport) -> Vec<f64> {
    r.values.values().copied().collect()
}

#[test]
fn pagerank_matches_dense_solve() {
    let mut rng = rng(11);
    let tight = PageRankParams { tol: 1e-12, max_iters: 10_000, ..Default::default() };
    for _ in 0..300 {
        let d = random_digraph(&mut rng, 10, true);
        let g = to_knowledge_graph(&d);
        let oracle = pagerank_dense(&d, 0.85);
        let pr = pagerank(&g, tight).unwrap();
        assert!(pr.converged);
        let got = values(&pr.report);
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{d:?}: {got:?} vs {oracle:?}");
            assert!(*a >= 0.15 / d.n as f64 - 1e-12);
        }
        // Defaults may stop at the iteration cap; the mass is still exact.
        let pr = pagerank(&g, PageRankParams::default()).unwrap();
        assert!(pr.converged || pr.iterations == 100);
        assert!((values(&pr.report).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn pagerank_two_nodes_closed_form() {
    // A→B with B dangling: x_A = (1−d)/2 + d·x_B/2, x_B = x_A + x_A·… solved densely.
    let d = Digraph { n: 2, edges: vec![(0, 1)] };
    let oracle = pagerank_dense(&d, 0.85);
    // Hand solution: x_A = 0.15/2 + 0.85·x_B/2, x_A + x_B = 1.
    let xa = (0.075 + 0.425) / 1.425;
    assert!((oracle[0] - xa).abs() < 1e-12);
    let pr = pagerank(&to_knowledge_graph(&d), PageRankParams::default()).unwrap();
    assert!((pr.report.get("v00").unwrap() - xa).abs() < 1e-8);
}

#[test]
fn pagerank_uniform_on_vertex_transitive_graphs() {
    for n in 2..9 {
        // Directed cycle and complete digraph.
        let cycle = Digraph { n, edges: (0..n).map(|i| (i, (i + 1) % n)).collect() };
        let complete =
            Digraph { n, edges: (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect() };
        for d in [cycle, complete] {
            let pr = pagerank(&to_knowledge_graph(&d), PageRankParams::default()).unwrap();
            for v in values(&pr.report) {
                assert!((v - 1.0 / n as f64).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn prestige_matches_brute_force_reachability() {
    let mut rng = rng(12);
    for _ in 0..1200 {
        let d = random_digraph(&mut rng, 8, true);
        assert_eq!(values(&domain_prestige(&to_knowledge_graph(&d))), prestige_brute(&d), "{d:?}");
    }
}

#[test]
fn betweenness_matches_exhaustive_enumeration() {
    let mut rng = rng(13);
    for _ in 0..400 {
        let d = random_digraph(&mut rng, 7, false);
        let got = values(&betweenness(&to_knowledge_graph(&d)));
        for (a, b) in got.iter().zip(betweenness_exhaustive(&d)) {
            assert!((a - b).abs() < 1e-9, "{d:?}");
        }
    }
}

#[test]
fn bridging_matches_formula() {
    let mut rng = rng(14);
    for _ in 0..400 {
        let d = random_digraph(&mut rng, 10, true);
        let got = values(&bridging_coefficient(&to_knowledge_graph(&d)));
        for (a, b) in got.iter().zip(bridging_direct(&d)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn handshake_and_clustering_bounds() {
    let mut rng = rng(15);
    for _ in 0..200 {
        let g = to_knowledge_graph(&random_digraph(&mut rng, 12, true));
        let total: f64 = values(&degree(&g)).iter().sum();
        assert_eq!(total as usize, 2 * induced_undirected(&g).link_count());
        assert!(values(&clustering_coefficients(&g)).iter().all(|c| (0.0..=1.0).contains(c)));
    }
}

#[test]
fn communities_partition_and_beat_single_community() {
    let mut rng = rng(16);
    for _ in 0..300 {
        let g = to_knowledge_graph(&random_digraph(&mut rng, 14, false));
        let v = induced_undirected(&g);
        let p = greedy_modularity(&v);
        let mut all: Vec<usize> = p.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..v.len()).collect::<Vec<_>>());
        let whole = vec![(0..v.len()).collect::<Vec<_>>()];
        assert!(modularity(&v, &p) >= modularity(&v, &whole) - 1e-12);
        // Same answer every time.
        assert_eq!(greedy_modularity(&v), p);
    }
}

#[test]
fn two_disjoint_triangles() {
    let d = Digraph { n: 6, edges: vec![(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] };
    let g = to_knowledge_graph(&d);
    assert_eq!(connected_components(&g).len(), 2);
    assert_eq!(communities(&g).len(), 2);
}

#[test]
fn summary_composes_individual_metrics() {
    let mut rng = rng(17);
    let d = Digraph {
        n: 34,
        edges: {
            let mut e = Vec::new();
            for a in 0..34 {
                for b in a + 1..34 {
                    if rand::Rng::random_bool(&mut rng, 0.14) {
                        e.push((a, b));
                    }
                }
            }
            e
        },
    };
    let g = to_knowledge_graph(&d);
    let s = summarize(&g);
    assert_eq!(s.betweenness, betweenness(&g).values);
    assert_eq!(s.path_length_histogram, path_length_histogram(&g));
    assert_eq!(s.components, connected_components(&g));
    assert_eq!(s.communities, communities(&g));
    assert_eq!(s.degree_histogram.values().sum::<usize>(), g.node_count());
    let mut deg_hist = std::collections::BTreeMap::new();
    for v in degree(&g).values.values() {
        *deg_hist.entry(*v as usize).or_insert(0) += 1;
    }
    assert_eq!(s.degree_histogram, deg_hist);
    let clustering = clustering_coefficients(&g);
    assert_eq!(s.clustering_histogram.iter().sum::<usize>(), clustering.values.len());
    let members: usize = s.communities.iter().map(|c| c.members.len()).sum();
    assert_eq!(members, g.node_count());
    assert_eq!(summarize(&g), s);
}

#[test]
fn report_json_shape() {
    let g = to_knowledge_graph(&Digraph { n: 3, edges: vec![(0, 1), (1, 2), (2, 0)] });
    let json = serde_json::to_value(pagerank(&g, PageRankParams::default()).unwrap().report).unwrap();
    assert_eq!(json["metric"], "pagerank");
    assert_eq!(json["values"].as_object().unwrap().len(), 3);
    assert_eq!(json["top_k"][0][0], "v00");
    let _ = KnowledgeGraph::new();
    let _ = NodeId::from_label("x");
}
