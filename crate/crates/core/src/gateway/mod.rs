//! Chat-completion access: an OpenAI-compatible HTTP client with retries,
//! a scripted mock for exact transcript tests, and a synthetic mock that
//! answers in the structured reasoning format without any network.

mod config;
mod http;
mod mock;
mod recording;
mod synthetic;
mod types;

use std::sync::Arc;

use thiserror::Error;

pub use config::{AgentProfile, GatewayConfig, RetryPolicy, DEFAULT_BASE_URL, ENV_API_KEY, ENV_BASE_URL};
pub use http::{HttpGateway, HttpReply, MinInterval, NoLimit, RateLimiter, Transport, UreqTransport};
pub use mock::{ScriptEntry, ScriptedMock};
pub use recording::{Exchange, Recorder};
pub use synthetic::SyntheticMock;
pub use types::{AgentRole, ChatRequest, ChatResponse, Message, Role, Sampling, Usage};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed endpoint reply: {0}")]
    Protocol(String),
    #[error("mock script exhausted after {calls} call(s)")]
    ScriptExhausted { calls: usize },
    #[error("mock call {call}: {detail}")]
    ExpectationFailed { call: usize, expected: String, detail: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gateway configuration: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport { .. })
    }
}

/// One chat completion per call. Implementations are shared across threads.
pub trait Gateway: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError>;

    fn endpoint_id(&self) -> String;
}

impl<G: Gateway + ?Sized> Gateway for &G {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(req)
    }

    fn endpoint_id(&self) -> String {
        (**self).endpoint_id()
    }
}

impl<G: Gateway + ?Sized> Gateway for Box<G> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(req)
    }

    fn endpoint_id(&self) -> String {
        (**self).endpoint_id()
    }
}

impl<G: Gateway + ?Sized> Gateway for Arc<G> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        (**self).complete(req)
    }

    fn endpoint_id(&self) -> String {
        (**self).endpoint_id()
    }
}

/// Builds the gateway named by `cfg.base_url`: `mock:` for the synthetic
/// responder, `mock:<script.json>` for a scripted mock, anything else is HTTP.
pub fn open(cfg: &GatewayConfig) -> Result<Arc<dyn Gateway>, GatewayError> {
    cfg.validate()?;
    match cfg.base_url.strip_prefix("mock:") {
        Some("") => Ok(Arc::new(SyntheticMock::new())),
        Some(path) => Ok(Arc::new(ScriptedMock::from_file(std::path::Path::new(path))?)),
        None => Ok(Arc::new(HttpGateway::new(cfg.clone())?)),
    }
}
