use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, ChatResponse, Gateway, GatewayError};

/// One request and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub seq: usize,
    pub request: ChatRequest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<ChatResponse>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Wraps a gateway, keeping every exchange and optionally streaming each
/// one as a JSON line to a trace sink.
pub struct Recorder<G> {
    inner: G,
    log: Mutex<Vec<Exchange>>,
    trace: Option<Mutex<Box<dyn Write + Send>>>,
}

impl<G: Gateway> Recorder<G> {
    pub fn new(inner: G) -> Self {
        Self { inner, log: Mutex::new(Vec::new()), trace: None }
    }

    pub fn with_trace(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.trace = Some(Mutex::new(sink));
        self
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    /// Writes all exchanges so far as JSON lines.
    pub fn save_transcript(&self, path: &Path) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for x in self.exchanges() {
            serde_json::to_writer(&mut out, &x)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

impl<G: Gateway> Gateway for Recorder<G> {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let result = self.inner.complete(req);
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        let x = Exchange {
            seq: log.len(),
            request: req.clone(),
            response: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(|e| e.to_string()),
        };
        if let Some(sink) = &self.trace {
            let mut sink = sink.lock().unwrap_or_else(|e| e.into_inner());
            // Tracing is best effort; a broken sink must not fail the call.
            if let Ok(line) = serde_json::to_string(&x) {
                let _ = writeln!(sink, "{line}");
                let _ = sink.flush();
            }
        }
        log.push(x);
        result
    }

    fn endpoint_id(&self) -> String {
        self.inner.endpoint_id()
    }
}
