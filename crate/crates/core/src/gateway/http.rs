use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tracing::{debug, warn};

use super::{ChatRequest, ChatResponse, Gateway, GatewayConfig, GatewayError, Usage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// One POST of a JSON body. `Err` is a transport-level failure (connect,
/// timeout, reset); HTTP error statuses come back as `Ok`.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &str) -> Result<HttpReply, String> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = bearer {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

pub trait RateLimiter: Send + Sync {
    /// Blocks until the next call may go out.
    fn acquire(&self);
}

pub struct NoLimit;

impl RateLimiter for NoLimit {
    fn acquire(&self) {}
}

/// Enforces a minimum spacing between consecutive calls.
pub struct MinInterval {
    interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl MinInterval {
    pub fn new(interval: Duration) -> Self {
        Self { interval, last: Mutex::new(None) }
    }
}

impl RateLimiter for MinInterval {
    fn acquire(&self) {
        let mut last = self.last.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.interval {
                std::thread::sleep(self.interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct HttpGateway {
    cfg: GatewayConfig,
    api_key: Option<String>,
    transport: Arc<dyn Transport>,
    limiter: Arc<dyn RateLimiter>,
    sleep: Sleeper,
}

impl HttpGateway {
    /// Reads the key from the configured environment variable.
    pub fn new(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.trim().is_empty());
        let transport = Arc::new(UreqTransport::new(cfg.timeout()));
        let limiter: Arc<dyn RateLimiter> = if cfg.min_interval_ms > 0 {
            Arc::new(MinInterval::new(Duration::from_millis(cfg.min_interval_ms)))
        } else {
            Arc::new(NoLimit)
        };
        Ok(Self { cfg, api_key, transport, limiter, sleep: Arc::new(std::thread::sleep) })
    }

    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_rate_limiter(mut self, limiter: Arc<dyn RateLimiter>) -> Self {
        self.limiter = limiter;
        self
    }

    /// Replaces the backoff sleep, e.g. to record delays in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }
}

fn request_body(req: &ChatRequest) -> String {
    json!({
        "model": req.model_name,
        "messages": req.messages,
        "temperature": req.sampling.temperature,
        "top_p": req.sampling.top_p,
        "max_tokens": req.sampling.max_tokens,
    })
    .to_string()
}

fn excerpt(s: &str) -> String {
    let mut out: String = s.chars().take(200).collect();
    if out.len() < s.len() {
        out.push('…');
    }
    out
}

fn parse_reply(body: &str) -> Result<(String, Usage), GatewayError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| GatewayError::Protocol(format!("{e}: {}", excerpt(body))))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| GatewayError::Protocol(format!("no choices[0].message.content in {}", excerpt(body))))?;
    let usage = v
        .get("usage")
        .cloned()
        .map(serde_json::from_value::<Usage>)
        .transpose()
        .map_err(|e| GatewayError::Protocol(format!("usage: {e}")))?
        .unwrap_or_default();
    Ok((content.to_string(), usage))
}

enum Outcome {
    Done(Result<(String, Usage), GatewayError>),
    Retry(String),
}

fn classify(reply: Result<HttpReply, String>) -> Outcome {
    match reply {
        Err(e) => Outcome::Retry(e),
        Ok(HttpReply { status, body }) => match status {
            200..=299 => Outcome::Done(parse_reply(&body)),
            401 | 403 => Outcome::Done(Err(GatewayError::Auth(format!("HTTP {status}: {}", excerpt(&body))))),
            408 | 429 | 500..=599 => Outcome::Retry(format!("HTTP {status}: {}", excerpt(&body))),
            _ => Outcome::Done(Err(GatewayError::Protocol(format!("HTTP {status}: {}", excerpt(&body))))),
        },
    }
}

impl Gateway for HttpGateway {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        let base = self.cfg.endpoint_for(req.agent);
        if self.api_key.is_none() && self.cfg.key_required(base) {
            return Err(GatewayError::Auth(format!(
                "{} is not set and {base} requires a key",
                self.cfg.api_key_env
            )));
        }
        let url = format!("{}/chat/completions", base.trim_end_matches('/'));
        let body = request_body(req);
        let max = self.cfg.retry.max_attempts.max(1);
        let started = Instant::now();
        let mut attempt = 0;
        loop {
            attempt += 1;
            self.limiter.acquire();
            debug!(url = %url, attempt, agent = req.agent.as_str(), "chat completion");
            match classify(self.transport.post_json(&url, self.api_key.as_deref(), &body)) {
                Outcome::Done(result) => {
                    let (content, usage) = result?;
                    return Ok(ChatResponse {
                        content,
                        usage,
                        latency_ms: started.elapsed().as_millis() as u64,
                        endpoint_id: format!("{base}#{}", req.model_name),
                        attempts: attempt,
                    });
                }
                Outcome::Retry(message) if attempt >= max => {
                    return Err(GatewayError::Transport { attempts: attempt, message });
                }
                Outcome::Retry(message) => {
                    let delay = self.cfg.retry.delay(attempt);
                    warn!(attempt, max, ?delay, %message, "retrying chat completion");
                    (self.sleep)(delay);
                }
            }
        }
    }

    fn endpoint_id(&self) -> String {
        self.cfg.base_url.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_parsing() {
        let (c, u) = parse_reply(
            r#"{"choices":[{"message":{"role":"assistant","content":"OK"}}],"usage":{"prompt_tokens":3,"completion_tokens":1,"total_tokens":4}}"#,
        )
        .unwrap();
        assert_eq!(c, "OK");
        assert_eq!(u.total_tokens, 4);
        assert!(matches!(parse_reply(r#"{"choices":[]}"#), Err(GatewayError::Protocol(_))));
        assert!(matches!(parse_reply("<html>"), Err(GatewayError::Protocol(_))));
    }

    #[test]
    fn status_classes() {
        let reply = |status| Ok(HttpReply { status, body: String::new() });
        assert!(matches!(classify(reply(503)), Outcome::Retry(_)));
        assert!(matches!(classify(reply(429)), Outcome::Retry(_)));
        assert!(matches!(classify(reply(401)), Outcome::Done(Err(GatewayError::Auth(_)))));
        assert!(matches!(classify(reply(400)), Outcome::Done(Err(GatewayError::Protocol(_)))));
        assert!(matches!(classify(Err("reset".into())), Outcome::Retry(_)));
    }
}
