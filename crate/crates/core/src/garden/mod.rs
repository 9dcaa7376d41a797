//! Knowledge-garden growth: question → reasoning session → subgraph →
//! merge, repeated with human-supplied or model-generated questions.

mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::engine::{build_followup_prompt, fill, run_session, EngineError, ReasoningSession, SessionConfig};
use crate::gateway::{AgentRole, ChatRequest, Gateway, GatewayError, Message};
use crate::graph::{KnowledgeGraph, StepRef};
use crate::label::label_key;
use crate::metrics::{degree, summarize, GraphSummary};

pub use store::{GardenStore, GARDEN_FORMAT, STEP_FORMAT};

pub const DEFAULT_TOPIC_LIMIT: usize = 25;

#[derive(Debug, Error)]
pub enum GardenError {
    #[error("graph is empty")]
    EmptyGraph,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("garden already has its maximum of {max_steps} steps")]
    StepLimitReached { max_steps: usize },
    #[error("reasoning session failed: {0}")]
    Engine(#[from] EngineError),
    #[error("follow-up question: {0}")]
    Gateway(#[from] GatewayError),
    #[error("garden store: {0}")]
    Store(String),
    #[error("no garden session {0:?}")]
    NotFound(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptSource {
    Seed,
    Human,
    Autonomous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GardenMode {
    Autonomous,
    Steered,
}

impl std::str::FromStr for GardenMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "autonomous" => Ok(GardenMode::Autonomous),
            "steered" => Ok(GardenMode::Steered),
            _ => Err(format!("unknown garden mode {s:?} (autonomous|steered)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GardenConfig {
    /// Engine settings for each step; one shot (no refinement) by default.
    pub session: SessionConfig,
    pub topic_limit: usize,
    /// Replaces the follow-up template; must contain `{graph_str}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub followup_template: Option<String>,
}

impl Default for GardenConfig {
    fn default() -> Self {
        Self {
            session: SessionConfig { iterations: 0, ..Default::default() },
            topic_limit: DEFAULT_TOPIC_LIMIT,
            followup_template: None,
        }
    }
}

/// The follow-up question exchange behind an autonomous step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Followup {
    pub topics: Vec<String>,
    pub prompt: String,
    /// Every reply received, in order (at most two).
    pub replies: Vec<String>,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthStep {
    pub index: usize,
    pub prompt: String,
    pub prompt_source: PromptSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followup: Option<Followup>,
    pub session: ReasoningSession,
    pub subgraph: KnowledgeGraph,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardenSession {
    pub id: String,
    pub seed_prompt: String,
    pub mode: GardenMode,
    pub max_steps: usize,
    pub config: GardenConfig,
    pub steps: Vec<GrowthStep>,
    pub integrated: KnowledgeGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<GraphSummary>,
}

impl GardenSession {
    pub fn step_ref(&self, index: usize) -> StepRef {
        StepRef::new(&self.id, index as u32)
    }

    /// Fold of merge over the step subgraphs.
    pub fn rebuild_integrated(&self) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        for s in &self.steps {
            g.merge_from(&s.subgraph);
        }
        g
    }

    pub fn is_full(&self) -> bool {
        self.steps.len() >= self.max_steps
    }
}

/// Comma-joined display labels of the `limit` highest-degree nodes, ties by
/// node id.
pub fn graph_to_topic_string(g: &KnowledgeGraph, limit: usize) -> Result<String, GardenError> {
    Ok(top_topics(g, limit)?.join(", "))
}

fn top_topics(g: &KnowledgeGraph, limit: usize) -> Result<Vec<String>, GardenError> {
    if limit == 0 {
        return Err(GardenError::InvalidArgument("topic limit must be at least 1".into()));
    }
    if g.is_empty() {
        return Err(GardenError::EmptyGraph);
    }
    Ok(degree(g)
        .ranked()
        .into_iter()
        .take(limit)
        .map(|(id, _)| g.node(&id).expect("ranked ids come from the graph").display.clone())
        .collect())
}

/// True iff some topic occurs in the question, comparing normalized labels
/// (markup stripped, case and whitespace folded).
pub fn validate_followup(question: &str, topics: &[String]) -> bool {
    let q = label_key(question);
    topics.iter().map(|t| label_key(t)).any(|t| !t.is_empty() && q.contains(&t))
}

fn clean_question(reply: &str) -> String {
    let t = reply.trim();
    let t = t.strip_prefix("**").and_then(|r| r.strip_suffix("**")).unwrap_or(t);
    t.trim_matches(|c| c == '"' || c == '“' || c == '”').trim().to_string()
}

fn run_step<G: Gateway + ?Sized>(
    garden: &GardenSession,
    prompt: &str,
    gateway: &G,
) -> Result<(ReasoningSession, KnowledgeGraph), GardenError> {
    let index = garden.steps.len();
    let mut cfg = garden.config.session.clone();
    cfg.provenance = Some(garden.step_ref(index));
    let session = run_session(&format!("{}-step{index:03}", garden.id), prompt, &cfg, gateway)?;
    let subgraph = session.merged_graph.clone();
    Ok((session, subgraph))
}

/// Ids double as directory names.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Starts a garden with its seed step.
pub fn new_garden<G: Gateway + ?Sized>(
    id: &str,
    seed_prompt: &str,
    mode: GardenMode,
    max_steps: usize,
    config: GardenConfig,
    gateway: &G,
) -> Result<GardenSession, GardenError> {
    if !valid_id(id) {
        return Err(GardenError::InvalidArgument(format!(
            "garden id {id:?} must be non-empty ASCII letters, digits, '-', '_' or '.'"
        )));
    }
    if max_steps == 0 {
        return Err(GardenError::InvalidArgument("max_steps must be at least 1".into()));
    }
    if seed_prompt.trim().is_empty() {
        return Err(GardenError::InvalidArgument("empty seed prompt".into()));
    }
    if let Some(t) = &config.followup_template {
        if !t.contains("{graph_str}") {
            return Err(GardenError::InvalidArgument("follow-up template lacks {graph_str}".into()));
        }
    }
    let mut garden = GardenSession {
        id: id.to_string(),
        seed_prompt: seed_prompt.to_string(),
        mode,
        max_steps,
        config,
        steps: Vec::new(),
        integrated: KnowledgeGraph::new(),
        summary: None,
    };
    let (session, subgraph) = run_step(&garden, seed_prompt, gateway)?;
    garden.integrated = subgraph.clone();
    garden.steps.push(GrowthStep {
        index: 0,
        prompt: seed_prompt.to_string(),
        prompt_source: PromptSource::Seed,
        followup: None,
        session,
        subgraph,
        warnings: Vec::new(),
    });
    Ok(garden)
}

fn ask_followup<G: Gateway + ?Sized>(garden: &GardenSession, gateway: &G) -> Result<Followup, GardenError> {
    let topics = top_topics(&garden.integrated, garden.config.topic_limit)?;
    let graph_str = topics.join(", ");
    let prompt = match &garden.config.followup_template {
        Some(t) => fill(t, &[("graph_str", &graph_str)]),
        None => build_followup_prompt(&graph_str),
    };
    let profile = &garden.config.session.critic;
    let mut req = ChatRequest::new(AgentRole::Critic, profile.model.clone(), vec![Message::user(prompt.clone())]);
    req.sampling = profile.sampling;
    let mut replies = Vec::new();
    for _ in 0..2 {
        let reply = gateway.complete(&req)?.content;
        let valid = validate_followup(&clean_question(&reply), &topics);
        replies.push(reply);
        if valid {
            return Ok(Followup { topics, prompt, replies, valid: true });
        }
    }
    Ok(Followup { topics, prompt, replies, valid: false })
}

/// Adds one step. Steered gardens take `next_prompt`; autonomous gardens
/// generate the question from the integrated graph. On error the garden is
/// left as it was.
pub fn grow_step<'g, G: Gateway + ?Sized>(
    garden: &'g mut GardenSession,
    next_prompt: Option<&str>,
    gateway: &G,
) -> Result<&'g GrowthStep, GardenError> {
    if garden.is_full() {
        return Err(GardenError::StepLimitReached { max_steps: garden.max_steps });
    }
    let mut warnings = Vec::new();
    let (prompt, source, followup) = match (garden.mode, next_prompt) {
        (GardenMode::Steered, Some(p)) if !p.trim().is_empty() => (p.trim().to_string(), PromptSource::Human, None),
        (GardenMode::Steered, _) => {
            return Err(GardenError::InvalidArgument("a steered garden needs a non-empty prompt".into()))
        }
        (GardenMode::Autonomous, Some(_)) => {
            return Err(GardenError::InvalidArgument("an autonomous garden generates its own prompts".into()))
        }
        (GardenMode::Autonomous, None) => {
            let f = ask_followup(garden, gateway)?;
            if !f.valid {
                warn!(garden = %garden.id, "follow-up names none of the topics; using it anyway");
                warnings.push("follow-up question names none of the listed topics (after one retry)".into());
            }
            let q = clean_question(f.replies.last().expect("at least one reply"));
            if q.is_empty() {
                return Err(GardenError::Gateway(GatewayError::Protocol("empty follow-up question".into())));
            }
            (q, PromptSource::Autonomous, Some(f))
        }
    };
    let (session, subgraph) = run_step(garden, &prompt, gateway)?;
    let index = garden.steps.len();
    garden.integrated.merge_from(&subgraph);
    garden.summary = None;
    garden.steps.push(GrowthStep { index, prompt, prompt_source: source, followup, session, subgraph, warnings });
    Ok(garden.steps.last().expect("just pushed"))
}

/// Seed step plus `iterations` autonomous steps, persisting after each one
/// when a store is given.
pub fn run_autonomous<G: Gateway + ?Sized>(
    id: &str,
    seed_prompt: &str,
    iterations: usize,
    config: GardenConfig,
    gateway: &G,
    store: Option<&GardenStore>,
) -> Result<GardenSession, GardenError> {
    if iterations == 0 {
        return Err(GardenError::InvalidArgument("iterations must be at least 1".into()));
    }
    let mut garden = new_garden(id, seed_prompt, GardenMode::Autonomous, iterations + 1, config, gateway)?;
    if let Some(s) = store {
        s.save(&garden)?;
    }
    for _ in 0..iterations {
        grow_step(&mut garden, None, gateway)?;
        if let Some(s) = store {
            s.save(&garden)?;
        }
    }
    garden.summary = Some(summarize(&garden.integrated));
    if let Some(s) = store {
        s.save(&garden)?;
    }
    Ok(garden)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::Triple;

    #[test]
    fn topic_string_orders_by_degree() {
        let g = KnowledgeGraph::from_triples(
            &[Triple::new("Hub", "IS-A", "Leaf"), Triple::new("Hub", "IS-A", "Other")],
            &StepRef::new("t", 0),
        );
        assert_eq!(graph_to_topic_string(&g, 25).unwrap(), "Hub, Leaf, Other");
        assert_eq!(graph_to_topic_string(&g, 1).unwrap(), "Hub");
        assert!(matches!(graph_to_topic_string(&KnowledgeGraph::new(), 3), Err(GardenError::EmptyGraph)));
        assert!(matches!(graph_to_topic_string(&g, 0), Err(GardenError::InvalidArgument(_))));
    }

    #[test]
    fn followup_validation() {
        let music = vec!["Music".to_string()];
        assert!(validate_followup("What about Music and fracture?", &music));
        assert!(!validate_followup("Unrelated?", &music));
        assert!(validate_followup("How does **MUSIC**  shape art?", &["**music**".to_string()]));
        assert!(validate_followup("Where does  spider   silk go?", &["Spider Silk".to_string()]));
    }

    #[test]
    fn question_cleanup() {
        assert_eq!(clean_question("  \"Why silk?\"\n"), "Why silk?");
        assert_eq!(clean_question("**Why silk?**"), "Why silk?");
    }
}
