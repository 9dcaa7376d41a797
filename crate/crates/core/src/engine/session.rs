use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::prompts::{build_critique_prompt, build_improvement_prompt, build_integration_prompt, REGENERATE_INSTRUCTION};
use super::EngineError;
use crate::format::{parse_response, ReasoningTrace, THINKING_CLOSE, THINKING_OPEN};
use crate::gateway::{AgentProfile, AgentRole, ChatRequest, ChatResponse, Gateway, GatewayError, Message, Usage};
use crate::graph::{KnowledgeGraph, StepRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    /// Refinement rounds after the initial response.
    pub iterations: usize,
    /// Integrate all answers (true) or take the last one.
    pub integrate: bool,
    /// Whether the initial response is offered to integration as ANSWER #0.
    pub include_initial: bool,
    pub reasoner: AgentProfile,
    pub critic: AgentProfile,
    /// Tag for every record's graph. `None` tags record `i` as `<session id>#i`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<StepRef>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            iterations: 3,
            integrate: false,
            include_initial: true,
            reasoner: AgentProfile::default(),
            critic: AgentProfile::default(),
            provenance: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Initial,
    Critique,
    Improve,
    Regenerate,
    Integrate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallSummary {
    pub kind: CallKind,
    pub agent: AgentRole,
    /// Record the call belongs to (the integration call uses N + 1).
    pub iteration: usize,
    pub attempts: u32,
    pub latency_ms: u64,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub trace: ReasoningTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critique: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub improved_thinking: Option<String>,
    pub response_raw: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl IterationRecord {
    /// Text handed to the critic: the first thinking region, or the whole
    /// response when there is none.
    pub fn think(&self) -> &str {
        match &self.trace.thinking {
            Some(t) => t.trim(),
            None => self.response_raw.trim(),
        }
    }

    /// This record's answer candidate for integration.
    pub fn answer(&self) -> &str {
        let a = self.trace.final_answer.trim();
        if a.is_empty() {
            self.response_raw.trim()
        } else {
            a
        }
    }

    pub fn graph(&self, step: &StepRef) -> KnowledgeGraph {
        KnowledgeGraph::from_triples(&self.trace.graph_block, step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningSession {
    pub id: String,
    pub task: String,
    pub config: SessionConfig,
    pub records: Vec<IterationRecord>,
    /// Content of the integration call, when integrating.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<String>,
    pub final_answer: String,
    pub calls: Vec<CallSummary>,
    pub merged_graph: KnowledgeGraph,
}

impl ReasoningSession {
    fn new(id: &str, task: &str, config: &SessionConfig) -> Self {
        Self {
            id: id.to_string(),
            task: task.to_string(),
            config: config.clone(),
            records: Vec::new(),
            integration: None,
            final_answer: String::new(),
            calls: Vec::new(),
            merged_graph: KnowledgeGraph::new(),
        }
    }

    pub fn step_ref(&self, index: usize) -> StepRef {
        match &self.config.provenance {
            Some(step) => step.clone(),
            None => StepRef::new(&self.id, index as u32),
        }
    }

    /// Fold of merge over the per-record graphs.
    pub fn rebuild_graph(&self) -> KnowledgeGraph {
        let mut g = KnowledgeGraph::new();
        for r in &self.records {
            g.merge_from(&r.graph(&self.step_ref(r.index)));
        }
        g
    }

    pub fn usage(&self) -> Usage {
        self.calls.iter().fold(Usage::default(), |acc, c| Usage {
            prompt_tokens: acc.prompt_tokens + c.usage.prompt_tokens,
            completion_tokens: acc.completion_tokens + c.usage.completion_tokens,
            total_tokens: acc.total_tokens + c.usage.total_tokens,
        })
    }

    fn push_record(&mut self, record: IterationRecord) {
        self.merged_graph.merge_from(&record.graph(&self.step_ref(record.index)));
        self.records.push(record);
    }
}

/// Take-last returns the last record's answer; integrate returns the
/// integration call's content.
pub fn extract_final_answer(session: &ReasoningSession) -> String {
    if let Some(text) = &session.integration {
        return text.trim().to_string();
    }
    session.records.last().map(|r| r.answer().to_string()).unwrap_or_default()
}

/// Messages for regenerating a full response from revised thinking: the
/// task, the revised thinking as the assistant's own turn, then a request
/// to continue from it.
pub fn regeneration_messages(task: &str, improved_thinking: &str) -> Vec<Message> {
    vec![
        Message::user(task),
        Message::assistant(format!("{THINKING_OPEN}\n{improved_thinking}\n{THINKING_CLOSE}")),
        Message::user(REGENERATE_INSTRUCTION),
    ]
}

/// Drops thinking markers the model may have wrapped around revised thinking.
fn unwrap_thinking(text: &str) -> String {
    let t = text.trim();
    let t = t.strip_prefix(THINKING_OPEN).unwrap_or(t);
    let t = t.strip_suffix(THINKING_CLOSE).unwrap_or(t);
    t.trim().to_string()
}

struct Caller<'a, G: ?Sized> {
    gateway: &'a G,
    session: ReasoningSession,
}

impl<G: Gateway + ?Sized> Caller<'_, G> {
    fn call(
        &mut self,
        kind: CallKind,
        agent: AgentRole,
        iteration: usize,
        messages: Vec<Message>,
    ) -> Result<ChatResponse, GatewayError> {
        let profile = self.session.config.profile(agent);
        let mut req = ChatRequest::new(agent, profile.model.clone(), messages);
        req.sampling = profile.sampling;
        debug!(?kind, iteration, "reasoning call");
        let resp = self.gateway.complete(&req)?;
        self.session.calls.push(CallSummary {
            kind,
            agent,
            iteration,
            attempts: resp.attempts,
            latency_ms: resp.latency_ms,
            usage: resp.usage,
        });
        Ok(resp)
    }
}

impl SessionConfig {
    pub fn profile(&self, agent: AgentRole) -> &AgentProfile {
        match agent {
            AgentRole::Reasoner => &self.reasoner,
            AgentRole::Critic => &self.critic,
        }
    }
}

fn record(index: usize, raw: String) -> IterationRecord {
    let trace = parse_response(&raw);
    let mut warnings = Vec::new();
    if !trace.thinking_present {
        warnings.push("response has no thinking region".to_string());
    }
    IterationRecord { index, trace, critique: None, improved_thinking: None, response_raw: raw, warnings }
}

/// Runs one session. Calls, in order: initial (reasoner); per round
/// critique (critic), improve (reasoner), regenerate (reasoner); then
/// integrate (critic) when `cfg.integrate`.
pub fn run_session<G: Gateway + ?Sized>(
    id: &str,
    task: &str,
    cfg: &SessionConfig,
    gateway: &G,
) -> Result<ReasoningSession, EngineError> {
    let mut c = Caller { gateway, session: ReasoningSession::new(id, task, cfg) };
    if let Err(source) = drive(&mut c, task, cfg) {
        return Err(match source {
            Interrupt::Gateway(source) => EngineError::Gateway { source, partial: Box::new(c.session) },
            Interrupt::Engine(e) => e,
        });
    }
    let mut session = c.session;
    session.final_answer = extract_final_answer(&session);
    Ok(session)
}

enum Interrupt {
    Gateway(GatewayError),
    Engine(EngineError),
}

impl From<GatewayError> for Interrupt {
    fn from(e: GatewayError) -> Self {
        Interrupt::Gateway(e)
    }
}

impl From<EngineError> for Interrupt {
    fn from(e: EngineError) -> Self {
        Interrupt::Engine(e)
    }
}

fn drive<G: Gateway + ?Sized>(c: &mut Caller<'_, G>, task: &str, cfg: &SessionConfig) -> Result<(), Interrupt> {
    let initial = c.call(CallKind::Initial, AgentRole::Reasoner, 0, vec![Message::user(task)])?;
    c.session.push_record(record(0, initial.content));

    for i in 1..=cfg.iterations {
        let prev = c.session.records.last().expect("initial record");
        let think = prev.think().to_string();
        let mut warnings = Vec::new();
        if prev.trace.thinking.is_none() {
            warn!(iteration = i, "no thinking region; critiquing the full response");
            warnings.push(format!("record {} had no thinking region; critique saw the full response", i - 1));
        }

        let critique_prompt = build_critique_prompt(task, &think);
        let critique = c.call(CallKind::Critique, AgentRole::Critic, i, vec![Message::user(critique_prompt)])?;
        let critique = critique.content.trim().to_string();

        let improve_prompt = build_improvement_prompt(&think, &critique);
        let improved = c.call(CallKind::Improve, AgentRole::Reasoner, i, vec![Message::user(improve_prompt)])?;
        let improved = unwrap_thinking(&improved.content);

        let regenerated = c.call(CallKind::Regenerate, AgentRole::Reasoner, i, regeneration_messages(task, &improved))?;
        let mut rec = record(i, regenerated.content);
        if !rec.trace.thinking_present {
            // The model answered without repeating its thinking: read the
            // record as revised thinking followed by that answer.
            let spliced = format!("{THINKING_OPEN}\n{improved}\n{THINKING_CLOSE}\n\n{}", rec.response_raw.trim());
            let raw = std::mem::take(&mut rec.response_raw);
            rec = record(i, spliced);
            rec.response_raw = raw;
            rec.warnings = vec!["regenerated response omitted the thinking region; revised thinking spliced in".into()];
        }
        rec.warnings.splice(0..0, warnings);
        rec.critique = Some(critique);
        rec.improved_thinking = Some(improved);
        c.session.push_record(rec);
    }

    if cfg.integrate {
        let skip = usize::from(!cfg.include_initial && c.session.records.len() > 1);
        let answers: Vec<String> = c.session.records[skip..].iter().map(|r| r.answer().to_string()).collect();
        let prompt = build_integration_prompt(task, &answers)?;
        let n = c.session.records.len();
        let resp = c.call(CallKind::Integrate, AgentRole::Critic, n, vec![Message::user(prompt)])?;
        c.session.integration = Some(resp.content);
    }

    Ok(())
}
