//! Structured-reasoning orchestration: parse reasoning traces into knowledge
//! graphs and abstract patterns, drive critique/improve loops and knowledge
//! garden growth against chat-completion endpoints, and analyze the graphs.

pub mod format;
pub mod garden;
pub mod gateway;
pub mod engine;
pub mod label;
pub mod graph;
pub mod gin;
pub mod metrics;
