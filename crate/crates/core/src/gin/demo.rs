use std::fmt::Write as _;

use super::fit::AlignmentFit;
use super::model::{EmbeddingTable, GinGraph};

const EQUALS: [f64; 2] = [1.2, 0.5];
const TIMES: [f64; 2] = [0.8, 0.6];

/// The two equation graphs `F = m × a` and `V = I × R`. Node order is
/// output, parameter, input, `=`, `×`; edges `= → out`, `= → ×`, `× → par`,
/// `× → in` (aggregation treats them as undirected).
pub fn build_equation_graphs() -> (GinGraph, GinGraph) {
    let edges = [(3, 0), (3, 4), (4, 1), (4, 2), (1, 4), (2, 4)];
    let g = |labels: [&str; 3], vecs: [[f64; 2]; 3]| {
        let mut emb: Vec<Vec<f64>> = vecs.iter().map(|v| v.to_vec()).collect();
        emb.push(EQUALS.to_vec());
        emb.push(TIMES.to_vec());
        GinGraph::new(&[labels[0], labels[1], labels[2], "=", "×"], &edges, emb).expect("static graph")
    };
    (
        g(["F", "m", "a"], [[0.7, 0.3], [0.6, 0.9], [0.1, 0.9]]),
        g(["V", "I", "R"], [[0.2, 0.9], [0.05, 0.8], [0.9, 0.1]]),
    )
}

/// Iteration-1 vectors of F, m, a, =, × as published (two decimals).
pub fn published_iteration1() -> Vec<Vec<f64>> {
    vec![vec![-0.96, 0.29], vec![-0.70, 0.72], vec![0.68, 0.73], vec![0.58, -0.81], vec![0.39, -0.92]]
}

/// F↔V, m↔I, a↔R, =↔=, ×↔× as indices into the second graph.
pub fn equation_matching() -> Vec<usize> {
    vec![0, 1, 2, 3, 4]
}

fn fmt_vec(v: &[f64], decimals: Option<usize>) -> String {
    let parts: Vec<String> = match decimals {
        None => v.iter().map(|x| x.to_string()).collect(),
        Some(d) => v.iter().map(|x| format!("{x:.d$}")).collect(),
    };
    format!("({})", parts.join(", "))
}

/// One row per node of both graphs: `node  graph  vector`. Values print
/// with shortest round-trip formatting unless `decimals` is given.
pub fn iteration_table(
    (g1, t1): (&GinGraph, &EmbeddingTable),
    (g2, t2): (&GinGraph, &EmbeddingTable),
    decimals: Option<usize>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6}{:<7}h_v^({})", "Node", "Graph", t1.iteration);
    for (name, g, t) in [("G1", g1, t1), ("G2", g2, t2)] {
        for (label, v) in g.node_labels.iter().zip(&t.vectors) {
            let _ = writeln!(out, "{label:<6}{name:<7}{}", fmt_vec(v, decimals));
        }
    }
    out
}

/// Text report for `gin-demo`: iteration-0 inputs, fitted iteration-1
/// outputs side by side, and fit diagnostics.
pub fn render_demo(g1: &GinGraph, g2: &GinGraph, fit: &AlignmentFit) -> String {
    let mut out = String::new();
    out.push_str("Iteration 0 (initial embeddings)\n");
    out.push_str(&iteration_table((g1, &EmbeddingTable::initial(g1)), (g2, &EmbeddingTable::initial(g2)), None));
    out.push_str("\nIteration 1 (after one GIN update with the fitted MLP)\n");
    let _ = writeln!(out, "{:<6}{:<20}{:<6}{:<20}{:<10}published", "G1", "h_v^(1)", "G2", "h_v^(1)", "|diff|");
    let published = published_iteration1();
    for (v, w) in super::equation_matching().into_iter().enumerate() {
        let (a, b) = (&fit.g1_table.vectors[v], &fit.g2_table.vectors[w]);
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let _ = writeln!(
            out,
            "{:<6}{:<20}{:<6}{:<20}{:<10}{}",
            g1.node_labels[v],
            fmt_vec(a, Some(4)),
            g2.node_labels[w],
            fmt_vec(b, Some(4)),
            format!("{diff:.1e}"),
            fmt_vec(&published[v], Some(2)),
        );
    }
    let _ = writeln!(
        out,
        "\ngraph embedding G1 {}  G2 {}",
        fmt_vec(&fit.g1_table.graph_embedding, Some(4)),
        fmt_vec(&fit.g2_table.graph_embedding, Some(4))
    );
    let _ = writeln!(out, "residual {:.3e}  graph-embedding gap {:.3e}", fit.residual, fit.graph_embedding_gap);
    out.push_str("(published values come from unpublished weights; only the alignment is reproduced)\n");
    let _ = writeln!(
        out,
        "min separation {:.3}  restart {} (seed {})  iterations {}",
        fit.separation, fit.restart, fit.restart_seed, fit.iterations
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gin::model::aggregate;

    #[test]
    fn equals_node_aggregate_by_hand() {
        let (g1, _) = build_equation_graphs();
        let eq = g1.index_of("=").unwrap();
        let a = aggregate(&g1, 0.0, &g1.initial_embeddings);
        assert!((a[eq][0] - 2.7).abs() < 1e-12 && (a[eq][1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn times_neighbourhood() {
        let (g1, g2) = build_equation_graphs();
        let times = g1.index_of("×").unwrap();
        let names: Vec<_> = g1.adjacency[times].iter().map(|&i| g1.node_labels[i].as_str()).collect();
        assert_eq!(names, ["m", "a", "="]);
        assert_eq!(g2.initial_embeddings[g2.index_of("R").unwrap()], vec![0.9, 0.1]);
        assert_eq!(g1.len(), 5);
    }

    #[test]
    fn iteration_zero_rows_print_exactly() {
        let (g1, g2) = build_equation_graphs();
        let t = iteration_table((&g1, &EmbeddingTable::initial(&g1)), (&g2, &EmbeddingTable::initial(&g2)), None);
        for row in ["F     G1     (0.7, 0.3)", "I     G2     (0.05, 0.8)", "=     G2     (1.2, 0.5)"] {
            assert!(t.contains(row), "{t}");
        }
    }
}
