//! Small graph isomorphism network (GIN) for the two-equation alignment
//! demonstration, plus 1-WL colour refinement as a reference test.
//!
//! Update rule, applied `depth` times with shared weights:
//!
//! ```text
//! h_v' = MLP((1 + ε)·h_v + Σ_{u ∈ N(v)} h_u)
//! ```
//!
//! Neighbourhoods are undirected. The MLP applies a ReLU between layers and
//! leaves the last layer linear.

mod demo;
mod fit;
mod model;
mod wl;

pub use demo::{build_equation_graphs, equation_matching, iteration_table, published_iteration1, render_demo};
pub use fit::{fit_alignment, fit_alignment_with, AlignmentFit, FitConfig, DEFAULT_BUDGET, FIXED_SEEDS};
pub use model::{gin_forward, gin_step, EmbeddingTable, GinGraph, GinModel, Layer};
pub use wl::{fnv1a, wl_refinement};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GinError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("matching is not an isomorphism: {0}")]
    NotIsomorphic(String),
    #[error("budget exhausted; best residual {best_residual:e}")]
    BudgetExhausted { best_residual: f64, best: Box<AlignmentFit> },
}
