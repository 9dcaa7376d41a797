use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AgentRole, ChatRequest, ChatResponse, Gateway, GatewayError, Usage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Substring the outbound prompt must contain.
    pub expect: String,
    pub reply: String,
    /// If set, the call must be made for this agent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentRole>,
}

impl ScriptEntry {
    pub fn new(expect: impl Into<String>, reply: impl Into<String>) -> Self {
        Self { expect: expect.into(), reply: reply.into(), agent: None }
    }

    pub fn for_agent(mut self, agent: AgentRole) -> Self {
        self.agent = Some(agent);
        self
    }
}

#[derive(Default)]
struct State {
    next: usize,
    calls: Vec<ChatRequest>,
}

/// Replays canned replies in order, checking each prompt on the way in.
pub struct ScriptedMock {
    script: Vec<ScriptEntry>,
    state: Mutex<State>,
}

impl ScriptedMock {
    pub fn new(script: Vec<ScriptEntry>) -> Result<Self, GatewayError> {
        if script.is_empty() {
            return Err(GatewayError::Config("empty mock script".into()));
        }
        Ok(Self { script, state: Mutex::default() })
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Result<Self, GatewayError> {
        Self::new(pairs.iter().map(|(e, r)| ScriptEntry::new(*e, *r)).collect())
    }

    /// A JSON array of `{"expect", "reply", "agent"?}` objects.
    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let script = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Self::new(script)
    }

    /// Every request received so far, in order (including rejected ones).
    pub fn calls(&self) -> Vec<ChatRequest> {
        self.lock().calls.clone()
    }

    pub fn remaining(&self) -> usize {
        self.script.len() - self.lock().next
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Explains where `expected` stops matching: the longest prefix that does
/// occur in the prompt, and the text from there on.
fn mismatch_detail(expected: &str, prompt: &str) -> String {
    let mut cut = 0;
    for (i, c) in expected.char_indices() {
        let end = i + c.len_utf8();
        if prompt.contains(&expected[..end]) {
            cut = end;
        } else {
            break;
        }
    }
    let shown: String = prompt.chars().take(160).collect();
    format!(
        "prompt does not contain {expected:?}; matched up to {:?}, missing {:?}; prompt starts {shown:?}",
        &expected[..cut],
        &expected[cut..]
    )
}

impl Gateway for ScriptedMock {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let mut state = self.lock();
        state.calls.push(req.clone());
        let call = state.next;
        let entry = self.script.get(call).ok_or(GatewayError::ScriptExhausted { calls: call })?;
        if let Some(agent) = entry.agent {
            if agent != req.agent {
                return Err(GatewayError::ExpectationFailed {
                    call,
                    expected: entry.expect.clone(),
                    detail: format!("expected a {} call, got {}", agent.as_str(), req.agent.as_str()),
                });
            }
        }
        let prompt = req.prompt_text();
        if !prompt.contains(&entry.expect) {
            return Err(GatewayError::ExpectationFailed {
                call,
                expected: entry.expect.clone(),
                detail: mismatch_detail(&entry.expect, &prompt),
            });
        }
        state.next += 1;
        let prompt_tokens = prompt.split_whitespace().count() as u64;
        let completion_tokens = entry.reply.split_whitespace().count() as u64;
        Ok(ChatResponse {
            content: entry.reply.clone(),
            usage: Usage { prompt_tokens, completion_tokens, total_tokens: prompt_tokens + completion_tokens },
            latency_ms: 0,
            endpoint_id: self.endpoint_id(),
            attempts: 1,
        })
    }

    fn endpoint_id(&self) -> String {
        "mock:script".into()
    }
}
