use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AgentRole, GatewayError, Sampling};

pub const ENV_API_KEY: &str = "GPFO_API_KEY";
pub const ENV_BASE_URL: &str = "GPFO_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "http://localhost:8000/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3, backoff_base_ms: 500, backoff_max_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Sleep before attempt `attempt + 1`, given `attempt` failures so far (1-based).
    /// base·2^(attempt−1), capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1).min(32);
        let ms = self.backoff_base_ms.saturating_mul(1u64 << exp).min(self.backoff_max_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentProfile {
    pub model: String,
    pub sampling: Sampling,
    /// Overrides the gateway-wide base URL for this agent.
    pub base_url: Option<String>,
}

impl Default for AgentProfile {
    fn default() -> Self {
        Self { model: "default".into(), sampling: Sampling::default(), base_url: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub base_url: String,
    /// Name of the environment variable holding the key.
    pub api_key_env: String,
    /// `None` means: required unless the endpoint is on a loopback host.
    pub require_api_key: Option<bool>,
    pub timeout_ms: u64,
    pub retry: RetryPolicy,
    /// Minimum spacing between outbound calls; 0 disables rate limiting.
    pub min_interval_ms: u64,
    pub reasoner: AgentProfile,
    pub critic: AgentProfile,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            api_key_env: ENV_API_KEY.into(),
            require_api_key: None,
            timeout_ms: 120_000,
            retry: RetryPolicy::default(),
            min_interval_ms: 0,
            reasoner: AgentProfile::default(),
            critic: AgentProfile::default(),
        }
    }
}

impl GatewayConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.retry.max_attempts < 1 {
            return Err(GatewayError::Config("retry.max_attempts must be at least 1".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(GatewayError::Config("empty base_url".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GatewayError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Applies `GPFO_BASE_URL` if set.
    pub fn with_env(mut self) -> Self {
        if let Ok(url) = std::env::var(ENV_BASE_URL) {
            if !url.trim().is_empty() {
                self.base_url = url.trim().to_string();
            }
        }
        self
    }

    pub fn profile(&self, agent: AgentRole) -> &AgentProfile {
        match agent {
            AgentRole::Reasoner => &self.reasoner,
            AgentRole::Critic => &self.critic,
        }
    }

    pub fn endpoint_for(&self, agent: AgentRole) -> &str {
        self.profile(agent).base_url.as_deref().unwrap_or(&self.base_url)
    }

    pub fn key_required(&self, base_url: &str) -> bool {
        self.require_api_key.unwrap_or_else(|| !is_loopback(base_url))
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

fn is_loopback(url: &str) -> bool {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    let authority = rest.split(['/', '?']).next().unwrap_or("");
    let host = match authority.strip_prefix('[') {
        Some(v6) => v6.split(']').next().unwrap_or(""),
        None => authority.rsplit_once(':').map_or(authority, |(h, _)| h),
    };
    matches!(host, "localhost" | "127.0.0.1" | "::1") || host.starts_with("127.")
}
