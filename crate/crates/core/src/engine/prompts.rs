use super::EngineError;

pub const CRITIQUE_TEMPLATE: &str = include_str!("templates/critique.txt");
pub const IMPROVEMENT_TEMPLATE: &str = include_str!("templates/improvement.txt");
pub const INTEGRATION_TEMPLATE: &str = include_str!("templates/integration.txt");
pub const FOLLOWUP_TEMPLATE: &str = include_str!("templates/followup.txt");

/// The enumerated-answers block as it appears in the integration template.
const ANSWER_BLOCK: &str = "ANSWER #0: {answer_0}\nANSWER #1: {answer_1}\n...";

/// Sent after the assistant turn holding the revised thinking.
pub const REGENERATE_INSTRUCTION: &str = "Continue from this revised thinking. Repeat it between the \
<|thinking|> and <|/thinking|> markers, then give your complete final answer to the question.";

/// Single pass over `template`: each `{name}` with a known name is replaced,
/// everything else (including braces inside substituted values) is left alone.
pub fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + vars.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = tail.find('}').and_then(|close| {
            let name = &tail[1..close];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (*v, close))
        });
        match hit {
            Some((value, close)) => {
                out.push_str(value);
                rest = &tail[close + 1..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn build_critique_prompt(question: &str, think: &str) -> String {
    fill(CRITIQUE_TEMPLATE, &[("question", question), ("think", think)])
}

pub fn build_improvement_prompt(think: &str, reflect: &str) -> String {
    fill(IMPROVEMENT_TEMPLATE, &[("think", think), ("reflect", reflect)])
}

pub fn build_integration_prompt(question: &str, answers: &[String]) -> Result<String, EngineError> {
    if answers.is_empty() {
        return Err(EngineError::EmptyAnswers);
    }
    let (head, tail) = INTEGRATION_TEMPLATE.split_once(ANSWER_BLOCK).expect("integration template shape");
    let lines: Vec<String> = answers.iter().enumerate().map(|(k, a)| format!("ANSWER #{k}: {a}")).collect();
    Ok(format!("{}{}{tail}", fill(head, &[("question", question)]), lines.join("\n")))
}

pub fn build_followup_prompt(graph_str: &str) -> String {
    fill(FOLLOWUP_TEMPLATE, &[("graph_str", graph_str)])
}
