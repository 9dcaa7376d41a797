use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::LazyLock;

use regex::Regex;

use super::{AgentRole, ChatRequest, ChatResponse, Gateway, GatewayError, Role, Usage};

// Cross-domain concepts the synthetic reasoner links questions to.
const VOCABULARY: &[&str] = &[
    "Fractal Geometry",
    "Bioluminescence",
    "Counterpoint",
    "Phenomenology",
    "Entropy",
    "Resonance",
    "Self-Assembly",
    "Hierarchical Structure",
    "Metaphor",
    "Spider Silk",
    "Baroque Architecture",
    "Origami",
    "Emergence",
    "Collagen",
    "Symmetry Breaking",
    "Impressionism",
    "Stoicism",
    "Mycelium Networks",
    "Harmonic Series",
    "Tensegrity",
    "Calligraphy",
    "Phase Transition",
    "Nacre",
    "Memory",
    "Rhythm",
    "Kintsugi",
    "Viscoelasticity",
    "Negative Space",
    "Ritual",
    "Crystal Growth",
    "Improvisation",
    "Feedback Loop",
];

const STOPWORDS: &[&str] = &[
    "about", "after", "also", "been", "being", "between", "both", "could", "does", "each", "from", "have",
    "into", "more", "most", "other", "over", "should", "some", "such", "than", "that", "their", "them",
    "then", "there", "these", "they", "this", "those", "through", "under", "very", "what", "when", "where",
    "which", "while", "with", "within", "would", "your", "might", "using", "used", "make", "made", "like",
    "ways", "well", "will", "just", "only", "many", "much", "across", "new", "inspired",
];

static QUOTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:^|[\s(])'([^'\n][^\n]*?)'(?:[\s?.,!:;)]|$)").unwrap());
static BOLD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\*\*([^*\n]+?)\*\*").unwrap());

const RELATIONS: &[&str] = &["RELATES-TO", "INFLUENCES", "IS-A", "INFLUENCES"];

fn hash(text: &str, salt: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ salt;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn title_case(word: &str) -> String {
    let mut cs = word.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs.flat_map(|c| c.to_lowercase())).collect(),
        None => String::new(),
    }
}

fn push_unique(out: &mut Vec<String>, label: String) {
    let key = label.to_lowercase();
    if !label.is_empty() && !out.iter().any(|l| l.to_lowercase() == key) {
        out.push(label);
    }
}

/// Concepts named in `text`: quoted or bolded phrases first, then known
/// vocabulary, then salient words.
fn anchors(text: &str, limit: usize) -> Vec<String> {
    let mut out = Vec::new();
    for re in [&*QUOTED, &*BOLD] {
        for caps in re.captures_iter(text) {
            let inner = caps[1].trim();
            if inner.len() <= 60 && !inner.ends_with(':') {
                push_unique(&mut out, inner.to_string());
            }
        }
    }
    let lower = text.to_lowercase();
    for v in VOCABULARY {
        if lower.contains(&v.to_lowercase()) {
            push_unique(&mut out, v.to_string());
        }
    }
    for w in text.split(|c: char| !(c.is_alphanumeric() || c == '-')) {
        let w = w.trim_matches('-');
        if w.chars().count() >= 5 && !STOPWORDS.contains(&w.to_lowercase().as_str()) {
            push_unique(&mut out, title_case(w));
        }
    }
    out.truncate(limit);
    if out.is_empty() {
        out.push("Idea".into());
    }
    out
}

fn fresh(seed: u64, avoid: &[String], count: usize) -> Vec<String> {
    let mut out = Vec::new();
    let n = VOCABULARY.len();
    let start = (seed % n as u64) as usize;
    for k in 0..n {
        let v = VOCABULARY[(start + k * 7) % n];
        if !avoid.iter().any(|a| a.eq_ignore_ascii_case(v)) && !out.iter().any(|o: &String| o == v) {
            out.push(v.to_string());
        }
        if out.len() == count {
            break;
        }
    }
    out
}

const GREEK: &[&str] = &["α", "β", "γ", "δ", "ε", "ζ"];

/// Thinking text (without markers) weaving the anchors and fresh concepts
/// into one connected graph.
fn thinking_body(anchors: &[String], fresh: &[String]) -> String {
    let mut chain: Vec<&str> = Vec::new();
    for (i, a) in anchors.iter().enumerate() {
        chain.push(a);
        if let Some(f) = fresh.get(i) {
            chain.push(f);
        }
    }
    for f in fresh.iter().skip(anchors.len()) {
        chain.push(f);
    }
    let mut lines = vec!["**Knowledge Graph:**".to_string(), String::new()];
    let mut k = 0;
    for w in chain.windows(2) {
        k += 1;
        lines.push(format!("{k}. **{}** -[{}]-> **{}**", w[0], RELATIONS[(k - 1) % RELATIONS.len()], w[1]));
    }
    if chain.len() > 2 {
        k += 1;
        lines.push(format!("{k}. **{}** -[RELATES-TO]-> **{}**", chain[chain.len() - 1], chain[0]));
    }
    let symbols: Vec<&str> = GREEK.iter().copied().take(chain.len().min(GREEK.len())).collect();
    lines.push(String::new());
    lines.push("**Abstract Pattern:**".into());
    lines.push(String::new());
    lines.push(symbols.join(" → "));
    if symbols.len() >= 2 {
        lines.push(format!("{} ∝ {}", symbols[0], symbols[symbols.len() - 1]));
    }
    lines.push(String::new());
    lines.push("**Explanation:**".into());
    lines.push(String::new());
    let bindings: Vec<String> =
        symbols.iter().zip(&chain).map(|(s, c)| format!("{s} represents **{c}**")).collect();
    lines.push(format!("- {}.", bindings.join(", ")));
    lines.push(String::new());
    lines.push("**Reasoning Steps**:".into());
    lines.push(String::new());
    for (i, w) in chain.windows(2).enumerate() {
        lines.push(format!("{}. Trace how {} shapes {}.", i + 1, w[0], w[1]));
    }
    lines.join("\n")
}

fn answer_for(chain_start: &str, fresh: &[String]) -> String {
    match fresh {
        [] => format!("{chain_start} is best understood on its own terms."),
        [f] => format!("{chain_start} can be reframed through {f}."),
        [f, g, ..] => format!("{chain_start} can be reframed through {f}, with {g} closing the loop."),
    }
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let rest = &text[from..];
    Some(rest.find(end).map_or(rest, |e| &rest[..e]).trim())
}

fn strip_markers(text: &str) -> &str {
    let t = text.trim();
    let t = t.strip_prefix("<|thinking|>").unwrap_or(t);
    let t = t.find("<|/thinking|>").map_or(t, |e| &t[..e]);
    t.trim()
}

/// Deterministic stand-in for both agents. It recognizes the critique,
/// improvement, integration and follow-up prompts by their closing line and
/// otherwise answers as the reasoner, in the thinking-marker format.
#[derive(Default)]
pub struct SyntheticMock {
    calls: AtomicUsize,
}

impl SyntheticMock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn reply(&self, req: &ChatRequest) -> String {
        let last = req.last_user().unwrap_or("").trim_end();
        let prompt = req.prompt_text();
        let seed = hash(&prompt, 0);
        if last.ends_with("The feedback is:") {
            let think = between(last, "Thought process:", "Provide feedback").unwrap_or("");
            let a = anchors(think, 2);
            let f = fresh(seed, &a, 1);
            return format!(
                "Make the link between **{}** and **{}** explicit, and bring in **{}** as a contrasting lens.",
                a[0],
                a.last().unwrap(),
                f[0]
            );
        }
        if last.ends_with("The revised thought process is:") {
            let think = between(last, "Thought process:", "Feedback:").unwrap_or("");
            let feedback = between(last, "Feedback:", "Provide the improved").unwrap_or("");
            let mut a = anchors(think, 2);
            for extra in anchors(feedback, 3) {
                push_unique(&mut a, extra);
            }
            a.truncate(3);
            let f = fresh(seed, &a, 1);
            return thinking_body(&a, &f);
        }
        if last.ends_with("The answer is:") {
            let question = between(last, "QUESTION:", "ANSWER #0:").unwrap_or("");
            let n = last.matches("ANSWER #").count();
            return format!("Drawing on {n} candidate answers to \"{question}\": {}", answer_for(&anchors(question, 1)[0], &fresh(seed, &[], 2)));
        }
        if last.ends_with("The new question is:") {
            let list = between(last, "Original list of topics/keywords:", "The new question is:").unwrap_or("");
            let topics: Vec<&str> = list.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
            let topic = topics.get((seed % topics.len().max(1) as u64) as usize).copied().unwrap_or("Idea");
            let avoid: Vec<String> = topics.iter().map(|t| t.to_string()).collect();
            let concept = &fresh(seed >> 8, &avoid, 1)[0];
            return match seed % 3 {
                0 => format!("How might '{topic}' be reimagined through the lens of '{concept}'?"),
                1 => format!("What could '{concept}' teach us about '{topic}'?"),
                _ => format!("Could '{topic}' and '{concept}' share a hidden design principle?"),
            };
        }
        let task = req.messages.iter().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str());
        let a = anchors(task, 3);
        let f = fresh(seed, &a, 2);
        let thinking = match req.messages.iter().rev().find(|m| m.role == Role::Assistant) {
            Some(prior) => strip_markers(&prior.content).to_string(),
            None => thinking_body(&a, &f),
        };
        format!("<|thinking|>\n{thinking}\n<|/thinking|>\n\n{}", answer_for(&a[0], &f))
    }
}

impl Gateway for SyntheticMock {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        req.validate()?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let content = self.reply(req);
        let prompt_tokens = req.prompt_text().split_whitespace().count() as u64;
        let completion_tokens = content.split_whitespace().count() as u64;
        let model = match req.agent {
            AgentRole::Reasoner => "reasoner",
            AgentRole::Critic => "critic",
        };
        Ok(ChatResponse {
            content,
            usage: Usage { prompt_tokens, completion_tokens, total_tokens: prompt_tokens + completion_tokens },
            latency_ms: 0,
            endpoint_id: format!("mock:#{model}"),
            attempts: 1,
        })
    }

    fn endpoint_id(&self) -> String {
        "mock:".into()
    }
}
