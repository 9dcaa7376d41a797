use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GinError;

/// Graph with undirected aggregation neighbourhoods and per-node features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinGraph {
    pub node_labels: Vec<String>,
    /// Sorted, symmetric neighbour lists; no self-loops.
    pub adjacency: Vec<Vec<usize>>,
    pub initial_embeddings: Vec<Vec<f64>>,
}

impl GinGraph {
    /// Builds a graph from (possibly directed, possibly repeated) edges;
    /// every edge contributes to both endpoints' neighbourhoods once.
    pub fn new(labels: &[&str], edges: &[(usize, usize)], embeddings: Vec<Vec<f64>>) -> Result<Self, GinError> {
        let n = labels.len();
        if embeddings.len() != n {
            return Err(GinError::InvalidGraph(format!("{n} labels but {} embeddings", embeddings.len())));
        }
        let dim = embeddings.first().map_or(0, Vec::len);
        if let Some(bad) = embeddings.iter().find(|e| e.len() != dim) {
            return Err(GinError::DimensionMismatch { expected: dim, found: bad.len() });
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GinError::InvalidGraph(format!("edge ({a}, {b}) out of range")));
            }
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        Ok(Self { node_labels: labels.iter().map(|s| s.to_string()).collect(), adjacency, initial_embeddings: embeddings })
    }

    pub fn len(&self) -> usize {
        self.node_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.initial_embeddings.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.node_labels.iter().position(|l| l == label)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Relabels nodes: node `i` of `self` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut labels = vec![String::new(); n];
        let mut emb = vec![Vec::new(); n];
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            labels[perm[i]] = self.node_labels[i].clone();
            emb[perm[i]] = self.initial_embeddings[i].clone();
            adjacency[perm[i]] = self.adjacency[i].iter().map(|&j| perm[j]).collect();
        }
        adjacency.iter_mut().for_each(|a: &mut Vec<usize>| a.sort_unstable());
        Self { node_labels: labels, adjacency, initial_embeddings: emb }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major, `out × in`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(&self.bias).map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinModel {
    pub epsilon: f64,
    pub layers: Vec<Layer>,
    /// Number of message-passing iterations.
    pub depth: usize,
}

impl GinModel {
    /// Checks that layer shapes compose and `depth ≥ 1`.
    pub fn validate(&self) -> Result<(), GinError> {
        if self.depth == 0 {
            return Err(GinError::InvalidGraph("depth must be at least 1".into()));
        }
        if self.layers.is_empty() {
            return Err(GinError::InvalidGraph("model has no layers".into()));
        }
        for l in &self.layers {
            if let Some(row) = l.weights.iter().find(|r| r.len() != l.input_dim()) {
                return Err(GinError::DimensionMismatch { expected: l.input_dim(), found: row.len() });
            }
            if l.weights.len() != l.bias.len() {
                return Err(GinError::DimensionMismatch { expected: l.weights.len(), found: l.bias.len() });
            }
        }
        for pair in self.layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(GinError::DimensionMismatch { expected: pair[0].output_dim(), found: pair[1].input_dim() });
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, Layer::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::output_dim)
    }

    /// Single linear identity layer, ε = 0, one iteration.
    pub fn identity(dim: usize) -> Self {
        let weights = (0..dim).map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        Self { epsilon: 0.0, layers: vec![Layer { weights, bias: vec![0.0; dim] }], depth: 1 }
    }

    /// Uniform(−scale, scale) weights and biases for the given layer widths.
    pub fn random<R: Rng>(rng: &mut R, widths: &[usize], scale: f64) -> Self {
        let layers = widths
            .windows(2)
            .map(|w| Layer {
                weights: (0..w[1]).map(|_| (0..w[0]).map(|_| rng.random_range(-scale..scale)).collect()).collect(),
                bias: (0..w[1]).map(|_| rng.random_range(-scale..scale)).collect(),
            })
            .collect();
        Self { epsilon: 0.0, layers, depth: 1 }
    }

    pub fn mlp(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len().saturating_sub(1);
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.apply(&h);
            if i < last {
                h.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        h
    }

    /// Flattened parameters (weights row-major, then bias, per layer).
    pub fn parameters(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().flatten().chain(&l.bias).copied()).collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().flatten().chain(l.bias.iter_mut()) {
                *v = it.next().expect("parameter vector too short");
            }
        }
    }
}

/// Node vectors at one iteration plus their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub iteration: usize,
    pub vectors: Vec<Vec<f64>>,
    pub graph_embedding: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(iteration: usize, vectors: Vec<Vec<f64>>) -> Self {
        let dim = vectors.first().map_or(0, Vec::len);
        let mut graph_embedding = vec![0.0; dim];
        for v in &vectors {
            for (g, x) in graph_embedding.iter_mut().zip(v) {
                *g += x;
            }
        }
        Self { iteration, vectors, graph_embedding }
    }

    pub fn initial(g: &GinGraph) -> Self {
        Self::new(0, g.initial_embeddings.clone())
    }
}

/// Neighbourhood aggregation `(1 + ε)·h_v + Σ_{u ∈ N(v)} h_u` for every node.
pub fn aggregate(g: &GinGraph, epsilon: f64, vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..g.len())
        .map(|v| {
            let mut a: Vec<f64> = vectors[v].iter().map(|x| (1.0 + epsilon) * x).collect();
            for &u in &g.adjacency[v] {
                for (s, x) in a.iter_mut().zip(&vectors[u]) {
                    *s += x;
                }
            }
            a
        })
        .collect()
}

pub fn gin_step(g: &GinGraph, model: &GinModel, table: &EmbeddingTable) -> Result<EmbeddingTable, GinError> {
    model.validate()?;
    if table.vectors.len() != g.len() {
        return Err(GinError::InvalidGraph(format!("table has {} rows for {} nodes", table.vectors.len(), g.len())));
    }
    if let Some(bad) = table.vectors.iter().find(|v| v.len() != model.input_dim()) {
        return Err(GinError::DimensionMismatch { expected: model.input_dim(), found: bad.len() });
    }
    let out = aggregate(g, model.epsilon, &table.vectors).iter().map(|a| model.mlp(a)).collect();
    Ok(EmbeddingTable::new(table.iteration + 1, out))
}

/// Tables for iterations `0..=depth`.
pub fn gin_forward(g: &GinGraph, model: &GinModel) -> Result<Vec<EmbeddingTable>, GinError> {
    let mut tables = vec![EmbeddingTable::initial(g)];
    for _ in 0..model.depth {
        let next = gin_step(g, model, tables.last().unwrap())?;
        tables.push(next);
    }
    Ok(tables)
}
