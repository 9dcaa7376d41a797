//! The recursive reasoning loop: an initial response, then N rounds of
//! critique → improve → regenerate, finalized by taking the last answer or
//! integrating all of them.

mod persist;
mod prompts;
mod session;

use thiserror::Error;

use crate::gateway::GatewayError;

pub use persist::{load_jsonl, save_jsonl, SESSION_FORMAT};
pub use prompts::{
    build_critique_prompt, build_followup_prompt, build_improvement_prompt, build_integration_prompt, fill,
    CRITIQUE_TEMPLATE, FOLLOWUP_TEMPLATE, IMPROVEMENT_TEMPLATE, INTEGRATION_TEMPLATE, REGENERATE_INSTRUCTION,
};
pub use session::{
    extract_final_answer, regeneration_messages, run_session, CallKind, CallSummary, IterationRecord,
    ReasoningSession, SessionConfig,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("integration needs at least one answer")]
    EmptyAnswers,
    #[error("{source} (after {} of the session's records)", partial.records.len())]
    Gateway {
        #[source]
        source: GatewayError,
        partial: Box<ReasoningSession>,
    },
    #[error("session file: {0}")]
    Persist(String),
}
