//! Sessions as JSON lines: a header, one line per record, one closing line.
//!
//! ```text
//! {"format":"gpfo-session/1","id":"s1","task":"…","config":{…}}
//! {"type":"record","index":0,"trace":{…},"response_raw":"…"}
//! {"type":"final","final_answer":"…","calls":[…]}
//! ```
//!
//! The merged graph is not stored; it is the fold of the record graphs.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CallSummary, EngineError, IterationRecord, ReasoningSession, SessionConfig};

pub const SESSION_FORMAT: &str = "gpfo-session/1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    id: String,
    task: String,
    config: SessionConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Record(IterationRecord),
    Final {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        integration: Option<String>,
        final_answer: String,
        calls: Vec<CallSummary>,
    },
}

fn io_err(e: impl std::fmt::Display) -> EngineError {
    EngineError::Persist(e.to_string())
}

pub fn save_jsonl<W: Write>(session: &ReasoningSession, mut out: W) -> Result<(), EngineError> {
    let header = Header {
        format: SESSION_FORMAT.into(),
        id: session.id.clone(),
        task: session.task.clone(),
        config: session.config.clone(),
    };
    put(&mut out, &header)?;
    for r in &session.records {
        put(&mut out, &Line::Record(r.clone()))?;
    }
    put(&mut out, &Line::Final {
        integration: session.integration.clone(),
        final_answer: session.final_answer.clone(),
        calls: session.calls.clone(),
    })?;
    out.flush().map_err(io_err)
}

fn put<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<(), EngineError> {
    serde_json::to_writer(&mut *out, value).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)
}

/// Reads a session back. A file without its closing line (an interrupted
/// run) loads as a partial session with an empty final answer.
pub fn load_jsonl<R: BufRead>(input: R) -> Result<ReasoningSession, EngineError> {
    let mut lines = input.lines().filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let first = lines.next().ok_or_else(|| io_err("empty session file"))?.map_err(io_err)?;
    let header: Header = serde_json::from_str(&first).map_err(io_err)?;
    if header.format != SESSION_FORMAT {
        return Err(io_err(format!("unsupported session format {:?}", header.format)));
    }
    let mut session = ReasoningSession {
        id: header.id,
        task: header.task,
        config: header.config,
        records: Vec::new(),
        integration: None,
        final_answer: String::new(),
        calls: Vec::new(),
        merged_graph: Default::default(),
    };
    for (n, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        match serde_json::from_str(&line).map_err(|e| io_err(format!("line {}: {e}", n + 2)))? {
            Line::Record(r) => {
                if r.index != session.records.len() {
                    return Err(io_err(format!("line {}: record {} out of order", n + 2, r.index)));
                }
                session.records.push(r);
            }
            Line::Final { integration, final_answer, calls } => {
                session.integration = integration;
                session.final_answer = final_answer;
                session.calls = calls;
            }
        }
    }
    session.merged_graph = session.rebuild_graph();
    Ok(session)
}
