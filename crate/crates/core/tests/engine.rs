use std::path::PathBuf;

use gpfo_core::engine::{
    load_jsonl, run_session, save_jsonl, CallKind, EngineError, ReasoningSession, SessionConfig, SESSION_FORMAT,
};
use gpfo_core::gateway::{AgentRole, GatewayError, Message, Role, ScriptEntry, ScriptedMock, SyntheticMock};
use gpfo_core::graph::KnowledgeGraph;

const TASK: &str = "How could spider silk inspire a {new} tough fiber?";

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/transcript_n3")
}

fn n3_mock() -> ScriptedMock {
    ScriptedMock::from_file(&fixture_dir().join("script.json")).unwrap()
}

fn cfg(iterations: usize, integrate: bool) -> SessionConfig {
    SessionConfig { iterations, integrate, ..Default::default() }
}

/// Golden prompts in call order: (agent, kind, messages).
fn goldens() -> Vec<(String, String, Vec<Message>)> {
    let mut files: Vec<_> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_stem().unwrap().to_str().unwrap().starts_with(|c: char| c.is_ascii_digit()))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap().to_str().unwrap().to_string();
            let parts: Vec<&str> = stem.splitn(3, '_').collect();
            let text = std::fs::read_to_string(&p).unwrap();
            let messages = if p.extension().unwrap() == "json" {
                serde_json::from_str(&text).unwrap()
            } else {
                vec![Message::user(text)]
            };
            (parts[1].to_string(), parts[2].to_string(), messages)
        })
        .collect()
}

#[test]
fn n3_transcript_matches_goldens_byte_for_byte() {
    let mock = n3_mock();
    let session = run_session("silk", TASK, &cfg(3, true), &mock).unwrap();
    let calls = mock.calls();
    let golden = goldens();
    assert_eq!(calls.len(), 11);
    assert_eq!(golden.len(), 11);
    for (k, (call, (agent, _, messages))) in calls.iter().zip(&golden).enumerate() {
        assert_eq!(call.agent.as_str(), agent, "call {}", k + 1);
        assert_eq!(&call.messages, messages, "call {}", k + 1);
    }
    let kinds: Vec<CallKind> = session.calls.iter().map(|c| c.kind).collect();
    let round = [CallKind::Critique, CallKind::Improve, CallKind::Regenerate];
    let mut expected = vec![CallKind::Initial];
    (0..3).for_each(|_| expected.extend(round));
    expected.push(CallKind::Integrate);
    assert_eq!(kinds, expected);
    for (c, (_, kind, _)) in session.calls.iter().zip(&golden) {
        assert_eq!(serde_json::to_value(c.kind).unwrap(), kind.as_str());
    }

    let integration = &calls[10].messages[0].content;
    for k in 0..4 {
        assert_eq!(integration.matches(&format!("ANSWER #{k}:")).count(), 1);
    }
    assert!(!integration.contains("ANSWER #4"));
    assert_eq!(session.final_answer, "Integrated: spin, layer and toughen.");
    assert_eq!(session.records.len(), 4);
    assert!(session.records[0].critique.is_none());
    for r in &session.records[1..] {
        assert!(r.critique.is_some() && r.improved_thinking.is_some());
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
    }
    assert_eq!(mock.remaining(), 0);
}

#[test]
fn merged_graph_is_the_fold_of_record_graphs() {
    let session = run_session("silk", TASK, &cfg(3, true), &n3_mock()).unwrap();
    assert_eq!(session.merged_graph, session.rebuild_graph());
    let mut reversed = KnowledgeGraph::new();
    for r in session.records.iter().rev() {
        reversed.merge_from(&r.graph(&session.step_ref(r.index)));
    }
    assert_eq!(reversed, session.merged_graph);
    // "Protein Fiber" plus one toughness node per round.
    assert_eq!(session.merged_graph.node_count(), 5);
    assert_eq!(session.merged_graph.node_by_label("toughness 3").unwrap().provenance.len(), 1);
    let fiber = session.merged_graph.node_by_label("Protein Fiber").unwrap();
    assert_eq!(fiber.provenance.len(), 4);
}

#[test]
fn zero_iterations_is_a_single_call() {
    let mock = ScriptedMock::from_pairs(&[(TASK, "<|thinking|>\nt\n<|/thinking|>\n\nOnly answer.")]).unwrap();
    let session = run_session("s", TASK, &cfg(0, false), &mock).unwrap();
    assert_eq!(session.records.len(), 1);
    assert_eq!(session.final_answer, session.records[0].trace.final_answer);
    assert_eq!(session.final_answer, "Only answer.");
    assert_eq!(mock.calls().len(), 1);
}

fn one_round_script(regenerated: &str) -> Vec<ScriptEntry> {
    vec![
        ScriptEntry::new(TASK, "<|thinking|>\n**Knowledge Graph:**\n\n1. **A** -[IS-A]-> **B**\n<|/thinking|>\n\nFirst.")
            .for_agent(AgentRole::Reasoner),
        ScriptEntry::new("The feedback is:", "Add C.").for_agent(AgentRole::Critic),
        ScriptEntry::new("Feedback: Add C.", "<|thinking|>**Knowledge Graph:**\n\n1. **A** -[IS-A]-> **C**<|/thinking|>")
            .for_agent(AgentRole::Reasoner),
        ScriptEntry::new("Continue from this revised thinking", regenerated).for_agent(AgentRole::Reasoner),
    ]
}

#[test]
fn take_last_uses_the_final_record() {
    let mock = ScriptedMock::new(one_round_script(
        "<|thinking|>\n**Knowledge Graph:**\n\n1. **A** -[IS-A]-> **C**\n<|/thinking|>\n\nSecond.",
    ))
    .unwrap();
    let session = run_session("s", TASK, &cfg(1, false), &mock).unwrap();
    assert_eq!(session.records.len(), 2);
    assert_eq!(session.final_answer, session.records[1].trace.final_answer);
    assert_eq!(session.final_answer, "Second.");
    assert_eq!(session.records[1].improved_thinking.as_deref(), Some("**Knowledge Graph:**\n\n1. **A** -[IS-A]-> **C**"));
    // The wrapped markers were stripped before re-injection.
    let regen = &mock.calls()[3];
    assert_eq!(regen.messages[1].role, Role::Assistant);
    assert_eq!(regen.messages[1].content, "<|thinking|>\n**Knowledge Graph:**\n\n1. **A** -[IS-A]-> **C**\n<|/thinking|>");
}

#[test]
fn regeneration_without_thinking_splices_revised_thinking() {
    let mock = ScriptedMock::new(one_round_script("Just the answer.")).unwrap();
    let session = run_session("s", TASK, &cfg(1, false), &mock).unwrap();
    let r = &session.records[1];
    assert_eq!(r.response_raw, "Just the answer.");
    assert!(r.trace.thinking_present);
    assert_eq!(r.trace.final_answer, "Just the answer.");
    assert_eq!(r.trace.graph_block.len(), 1);
    assert_eq!(r.warnings.len(), 1);
    assert!(session.merged_graph.node_by_label("C").is_some());
}

#[test]
fn missing_thinking_sends_full_response_to_critic() {
    let mock = ScriptedMock::new(vec![
        ScriptEntry::new(TASK, "No markers here."),
        ScriptEntry::new("Thought process: No markers here.\n", "Use markers."),
        ScriptEntry::new("Thought process: No markers here.\n\nFeedback: Use markers.", "revised"),
        ScriptEntry::new("<|thinking|>\nrevised\n<|/thinking|>", "<|thinking|>\nrevised\n<|/thinking|>\n\nDone."),
    ])
    .unwrap();
    let session = run_session("s", TASK, &cfg(1, false), &mock).unwrap();
    assert!(!session.records[0].warnings.is_empty());
    assert!(session.records[1].warnings.iter().any(|w| w.contains("full response")));
    assert_eq!(session.final_answer, "Done.");
}

#[test]
fn integration_can_exclude_the_initial_answer() {
    let mut c = cfg(3, true);
    c.include_initial = false;
    let mut script: Vec<ScriptEntry> = serde_json::from_str(
        &std::fs::read_to_string(fixture_dir().join("script.json")).unwrap(),
    )
    .unwrap();
    script.last_mut().unwrap().expect = "ANSWER #0: Answer 1: layer".into();
    let mock = ScriptedMock::new(script).unwrap();
    run_session("silk", TASK, &c, &mock).unwrap();
    let prompt = &mock.calls()[10].messages[0].content;
    assert_eq!(prompt.matches("ANSWER #").count(), 3);
    assert!(!prompt.contains("Answer zero"));
}

#[test]
fn gateway_failure_keeps_the_partial_session() {
    let mut script = one_round_script("x");
    script.truncate(2);
    let mock = ScriptedMock::new(script).unwrap();
    match run_session("s", TASK, &cfg(1, false), &mock) {
        Err(EngineError::Gateway { source: GatewayError::ScriptExhausted { calls: 2 }, partial }) => {
            assert_eq!(partial.records.len(), 1);
            assert_eq!(partial.calls.len(), 2);
            assert_eq!(partial.merged_graph.edge_count(), 1);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn identical_scripts_give_identical_sessions() {
    let a = run_session("silk", TASK, &cfg(3, true), &n3_mock()).unwrap();
    let b = run_session("silk", TASK, &cfg(3, true), &n3_mock()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn jsonl_round_trip_and_partial_load() {
    let session = run_session("silk", TASK, &cfg(3, true), &n3_mock()).unwrap();
    let mut buf = Vec::new();
    save_jsonl(&session, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 4 + 1);
    let header: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(header["format"], SESSION_FORMAT);
    assert_eq!(load_jsonl(buf.as_slice()).unwrap(), session);

    let truncated = lines[..3].join("\n");
    let partial: ReasoningSession = load_jsonl(truncated.as_bytes()).unwrap();
    assert_eq!(partial.records.len(), 2);
    assert!(partial.final_answer.is_empty());
    assert_eq!(partial.merged_graph, partial.rebuild_graph());

    let bad = text.replacen(SESSION_FORMAT, "gpfo-session/99", 1);
    assert!(matches!(load_jsonl(bad.as_bytes()), Err(EngineError::Persist(_))));
}

#[test]
fn synthetic_mock_runs_a_full_session() {
    let mock = SyntheticMock::new();
    let session = run_session("syn", "How can origami inform tough materials?", &cfg(3, true), &mock).unwrap();
    assert_eq!(mock.call_count(), 11);
    assert_eq!(session.records.len(), 4);
    assert!(session.records.iter().all(|r| r.trace.thinking_present && !r.trace.graph_block.is_empty()));
    assert!(!session.final_answer.is_empty());
    assert!(session.merged_graph.node_count() >= 3);
}
