//! Local/global task routing.
//!
//! A probe made of the first two and last two chunks is classified as
//! needing query-dependent (local) or document-wide (global) retrieval. The
//! classifier is either a chat-completion endpoint driven by a zero-shot
//! prompt, or a keyword heuristic. The LLM path never fails a retrieval: any
//! transport error or unparseable answer falls back to the heuristic.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{Chunk, Error, Result};

/// Zero-shot classification prompt; `[query]` is replaced by the probe.
pub const ROUTER_PROMPT: &str = include_str!("../resources/router_prompt.txt");

/// Case-insensitive substrings that mark a document-wide task.
pub const GLOBAL_PATTERNS: &[&str] = &[
    "summar",
    "most common word",
    "most frequent word",
    "most frequently",
    "entire document",
    "whole book",
];

pub const ENV_URL: &str = "MIXPR_ROUTER_URL";
pub const ENV_MODEL: &str = "MIXPR_ROUTER_MODEL";
pub const ENV_API_KEY: &str = "MIXPR_ROUTER_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskScope {
    /// Query-dependent retrieval.
    Local,
    /// Query-independent retrieval.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteSource {
    Llm,
    Heuristic,
    Forced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryClass {
    pub scope: TaskScope,
    pub source: RouteSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouterMode {
    Llm,
    #[default]
    Heuristic,
    ForcedLocal,
    ForcedGlobal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Full URL of an OpenAI-style chat-completions endpoint.
    pub url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl EndpointConfig {
    /// Reads `MIXPR_ROUTER_URL`, `MIXPR_ROUTER_MODEL` and
    /// `MIXPR_ROUTER_API_KEY`. Returns `None` when no URL is set.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(ENV_URL).ok().filter(|u| !u.is_empty())?;
        Some(Self {
            url,
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-4o-mini".into()),
            api_key: std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    pub mode: RouterMode,
    pub endpoint: Option<EndpointConfig>,
    pub timeout_secs: f64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            mode: RouterMode::Heuristic,
            endpoint: None,
            timeout_secs: 10.0,
        }
    }
}

impl RouterConfig {
    pub fn forced(scope: TaskScope) -> Self {
        Self {
            mode: match scope {
                TaskScope::Local => RouterMode::ForcedLocal,
                TaskScope::Global => RouterMode::ForcedGlobal,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == RouterMode::Llm && self.endpoint.is_none() {
            return Err(Error::Router("llm mode requires an endpoint".into()));
        }
        Ok(())
    }
}

/// First two and last two chunks, without repeats, in document order.
pub fn extract_probe(chunks: &[Chunk]) -> Result<String> {
    let m = chunks.len();
    if m == 0 {
        return Err(Error::EmptyCorpus);
    }
    if m <= 4 {
        let parts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        return Ok(parts.join("\n"));
    }
    Ok(format!(
        "{}\n{}\n...\n{}\n{}",
        chunks[0].text,
        chunks[1].text,
        chunks[m - 2].text,
        chunks[m - 1].text
    ))
}

pub fn render_prompt(probe: &str) -> String {
    ROUTER_PROMPT.replace("[query]", probe)
}

pub fn classify_heuristic(probe: &str) -> TaskScope {
    let lower = probe.to_lowercase();
    if GLOBAL_PATTERNS.iter().any(|p| lower.contains(p)) {
        TaskScope::Global
    } else {
        TaskScope::Local
    }
}

/// Interpret a model answer: `y` means global, `n` means local.
pub fn parse_answer(answer: &str) -> Option<TaskScope> {
    let trimmed = answer
        .trim()
        .trim_matches(|c: char| c.is_whitespace() || matches!(c, '\'' | '"' | '`' | '*' | '(' | '['));
    match trimmed.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('y') => Some(TaskScope::Global),
        Some('n') => Some(TaskScope::Local),
        _ => None,
    }
}

pub fn classify(probe: &str, config: &RouterConfig) -> QueryClass {
    let heuristic = || QueryClass {
        scope: classify_heuristic(probe),
        source: RouteSource::Heuristic,
    };
    match config.mode {
        RouterMode::ForcedLocal => QueryClass {
            scope: TaskScope::Local,
            source: RouteSource::Forced,
        },
        RouterMode::ForcedGlobal => QueryClass {
            scope: TaskScope::Global,
            source: RouteSource::Forced,
        },
        RouterMode::Heuristic => heuristic(),
        RouterMode::Llm => {
            let Some(endpoint) = &config.endpoint else {
                log::warn!("llm router has no endpoint configured; using heuristic");
                return heuristic();
            };
            match ask_llm(probe, endpoint, config.timeout_secs) {
                Ok(answer) => match parse_answer(&answer) {
                    Some(scope) => QueryClass {
                        scope,
                        source: RouteSource::Llm,
                    },
                    None => {
                        log::warn!("unrecognized router answer {answer:?}; using heuristic");
                        heuristic()
                    }
                },
                Err(e) => {
                    log::warn!("router endpoint failed ({e}); using heuristic");
                    heuristic()
                }
            }
        }
    }
}

fn ask_llm(probe: &str, endpoint: &EndpointConfig, timeout_secs: f64) -> Result<String> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs_f64(timeout_secs.max(0.001))))
        .build()
        .into();
    let body = json!({
        "model": endpoint.model,
        "messages": [{ "role": "user", "content": render_prompt(probe) }],
        "temperature": 0,
        "max_tokens": 4,
    });
    let mut request = agent.post(&endpoint.url);
    if let Some(key) = &endpoint.api_key {
        request = request.header("Authorization", &format!("Bearer {key}"));
    }
    let mut response = request.send_json(&body).map_err(|e| Error::Router(e.to_string()))?;
    let value: Value = response
        .body_mut()
        .read_json()
        .map_err(|e| Error::Router(e.to_string()))?;
    answer_text(&value).ok_or_else(|| Error::Router(format!("no answer text in response: {value}")))
}

/// Pull the completion text out of common chat/completion response shapes.
fn answer_text(value: &Value) -> Option<String> {
    let choice = value.get("choices").and_then(|c| c.get(0));
    choice
        .and_then(|c| c.pointer("/message/content"))
        .or_else(|| choice.and_then(|c| c.get("text")))
        .or_else(|| value.pointer("/message/content"))
        .or_else(|| value.get("response"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunks(n: usize) -> Vec<Chunk> {
        (0..n)
            .map(|i| Chunk {
                index: i,
                text: format!("c{i}"),
                word_count: 1,
                char_span: (0, 0),
            })
            .collect()
    }

    #[test]
    fn probe_selection() {
        assert_eq!(extract_probe(&chunks(10)).unwrap(), "c0\nc1\n...\nc8\nc9");
        assert_eq!(extract_probe(&chunks(3)).unwrap(), "c0\nc1\nc2");
        assert_eq!(extract_probe(&chunks(1)).unwrap(), "c0");
        assert!(extract_probe(&[]).is_err());
    }

    #[test]
    fn heuristic_examples() {
        assert_eq!(classify_heuristic("Summarize the book"), TaskScope::Global);
        assert_eq!(
            classify_heuristic("What are the 10 most common words in the above list?"),
            TaskScope::Global
        );
        assert_eq!(classify_heuristic("Where is the apple?"), TaskScope::Local);
    }

    #[test]
    fn forced_modes() {
        let c = classify("Summarize it", &RouterConfig::forced(TaskScope::Local));
        assert_eq!(
            c,
            QueryClass {
                scope: TaskScope::Local,
                source: RouteSource::Forced
            }
        );
        let c = classify("Where?", &RouterConfig::forced(TaskScope::Global));
        assert_eq!(c.scope, TaskScope::Global);
    }

    #[test]
    fn answer_parsing() {
        assert_eq!(parse_answer("y"), Some(TaskScope::Global));
        assert_eq!(parse_answer("  'Y'\n"), Some(TaskScope::Global));
        assert_eq!(parse_answer("\"n\""), Some(TaskScope::Local));
        assert_eq!(parse_answer("No."), Some(TaskScope::Local));
        assert_eq!(parse_answer("maybe"), None);
        assert_eq!(parse_answer(""), None);
    }

    #[test]
    fn prompt_is_rendered() {
        let p = render_prompt("Where is Mary?");
        assert!(p.contains("QUERY: Where is Mary?\n"));
        assert!(p.trim_end().ends_with("Answer:"));
        assert!(!p.contains("[query]"));
    }

    #[test]
    fn llm_without_endpoint_falls_back() {
        let config = RouterConfig {
            mode: RouterMode::Llm,
            ..RouterConfig::default()
        };
        assert!(config.validate().is_err());
        let c = classify("Summarize the book", &config);
        assert_eq!(
            c,
            QueryClass {
                scope: TaskScope::Global,
                source: RouteSource::Heuristic
            }
        );
    }

    #[test]
    fn unreachable_endpoint_falls_back() {
        let config = RouterConfig {
            mode: RouterMode::Llm,
            endpoint: Some(EndpointConfig {
                url: "http://127.0.0.1:9/v1/chat/completions".into(),
                model: "m".into(),
                api_key: None,
            }),
            timeout_secs: 1.0,
        };
        let c = classify("Where is the apple?", &config);
        assert_eq!(c.source, RouteSource::Heuristic);
        assert_eq!(c.scope, TaskScope::Local);
    }

    #[test]
    fn response_shapes() {
        let openai = json!({"choices": [{"message": {"role": "assistant", "content": "y"}}]});
        assert_eq!(answer_text(&openai).as_deref(), Some("y"));
        let legacy = json!({"choices": [{"text": "n"}]});
        assert_eq!(answer_text(&legacy).as_deref(), Some("n"));
        let ollama = json!({"message": {"content": "n"}});
        assert_eq!(answer_text(&ollama).as_deref(), Some("n"));
        assert_eq!(answer_text(&json!({"error": "x"})), None);
    }
}
